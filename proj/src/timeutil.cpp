#include "hvacreg/timeutil.hpp"

#include <cstdio>
#include <stdexcept>

namespace hvacreg {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int d[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return d[m - 1];
}

} // namespace

std::string iso8601_utc(std::int64_t epoch_s) {
    std::int64_t days = epoch_s / 86400;
    std::int64_t rem = epoch_s % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int year = 1970;
    while (true) {
        int ydays = is_leap(year) ? 366 : 365;
        if (days >= ydays) {
            days -= ydays;
            ++year;
        } else if (days < 0) {
            --year;
            days += is_leap(year) ? 366 : 365;
        } else {
            break;
        }
    }
    int month = 1;
    while (days >= days_in_month(year, month)) {
        days -= days_in_month(year, month);
        ++month;
    }
    int day = static_cast<int>(days) + 1;
    int hh = static_cast<int>(rem / 3600);
    int mm = static_cast<int>((rem % 3600) / 60);
    int ss = static_cast<int>(rem % 60);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", year, month, day, hh, mm, ss);
    return buf;
}

std::int64_t parse_iso8601_utc(const std::string& s) {
    int year, month, day, hh, mm, ss;
    char zone = '\0';
    int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%c", &year, &month, &day, &hh, &mm, &ss, &zone);
    if (n < 6 || month < 1 || month > 12 || day < 1 || day > days_in_month(year, month) || hh < 0 ||
        hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 60)
        throw std::runtime_error("bad ISO-8601 timestamp: '" + s + "'");
    std::int64_t days = 0;
    for (int y = 1970; y < year; ++y) days += is_leap(y) ? 366 : 365;
    for (int y = year; y < 1970; ++y) days -= is_leap(y) ? 366 : 365;
    for (int m = 1; m < month; ++m) days += days_in_month(year, m);
    days += day - 1;
    return days * 86400 + hh * 3600 + mm * 60 + ss;
}

} // namespace hvacreg
