#include "trafficpm/time.hpp"

#include <cctype>
#include <cstdio>

#include "trafficpm/error.hpp"

namespace trafficpm {

namespace {

class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    int digits(int count) {
        int value = 0;
        for (int i = 0; i < count; ++i) {
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
                fail("expected digit");
            value = value * 10 + (text_[pos_++] - '0');
        }
        return value;
    }

    void expect(char c) {
        if (pos_ >= text_.size() || text_[pos_] != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool at_end() const { return pos_ == text_.size(); }
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    void skip() { ++pos_; }

    [[noreturn]] void fail(const std::string& why) const {
        throw ParseError("bad timestamp '" + std::string(text_) + "': " + why, pos_);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

Date checked_date(Cursor& cur, int y, int m, int d) {
    Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) cur.fail("invalid calendar date");
    return date;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
    Cursor cur(text);
    int y = cur.digits(4);
    cur.expect('-');
    int mo = cur.digits(2);
    cur.expect('-');
    int d = cur.digits(2);
    Date date = checked_date(cur, y, mo, d);
    if (!cur.accept('T') && !cur.accept(' ')) cur.fail("expected 'T'");
    int hh = cur.digits(2);
    cur.expect(':');
    int mm = cur.digits(2);
    cur.expect(':');
    int ss = cur.digits(2);
    if (hh > 23 || mm > 59 || ss > 60) cur.fail("time of day out of range");
    if (cur.accept('.')) {
        if (!std::isdigit(static_cast<unsigned char>(cur.peek()))) cur.fail("expected fraction");
        while (std::isdigit(static_cast<unsigned char>(cur.peek()))) cur.skip();
    }
    std::chrono::seconds offset{0};
    if (cur.accept('Z')) {
    } else if (cur.peek() == '+' || cur.peek() == '-') {
        int sign = cur.peek() == '+' ? 1 : -1;
        cur.skip();
        int oh = cur.digits(2);
        cur.accept(':');
        int om = cur.digits(2);
        offset = std::chrono::seconds{sign * (oh * 3600 + om * 60)};
    }
    if (!cur.at_end()) cur.fail("trailing characters");

    auto t = std::chrono::sys_days{date} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
             std::chrono::seconds{ss};
    return Timestamp{t - offset};
}

std::string format_timestamp(Timestamp t) {
    auto day = std::chrono::floor<std::chrono::days>(t);
    std::chrono::year_month_day ymd{day};
    std::chrono::hh_mm_ss tod{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    return buf;
}

std::string format_timestamp_compact(Timestamp t) {
    std::string iso = format_timestamp(t);
    std::string out;
    out.reserve(iso.size());
    for (char c : iso)
        if (c != '-' && c != ':') out.push_back(c);
    return out;
}

Date parse_date(std::string_view text) {
    Cursor cur(text);
    int y = cur.digits(4);
    cur.expect('-');
    int m = cur.digits(2);
    cur.expect('-');
    int d = cur.digits(2);
    if (!cur.at_end()) cur.fail("trailing characters");
    return checked_date(cur, y, m, d);
}

std::string format_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

Date date_of(Timestamp t) { return Date{std::chrono::floor<std::chrono::days>(t)}; }

Timestamp floor_to_interval(Timestamp t, std::chrono::seconds interval) {
    auto n = t.time_since_epoch().count();
    auto w = interval.count();
    auto q = n / w;
    if (n % w != 0 && n < 0) --q;
    return Timestamp{std::chrono::seconds{q * w}};
}

void require_interval_divides_hour(std::chrono::seconds interval) {
    if (interval.count() <= 0 || 3600 % interval.count() != 0)
        throw ArgumentError("bin interval " + std::to_string(interval.count()) +
                            " s does not divide 3600");
}

}  // namespace trafficpm
