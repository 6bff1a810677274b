#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace trafficpm {

/// All timestamps are UTC with whole-second resolution.
using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::year_month_day;

/// Accepts `YYYY-MM-DDTHH:MM:SS` with optional fractional seconds
/// (truncated) and an optional `Z` or `+HH:MM` / `-HH:MM` offset. A space
/// may stand in for `T`. Offsets are folded into UTC. Throws ParseError.
Timestamp parse_timestamp(std::string_view text);

/// `2022-02-24T05:00:00Z`
std::string format_timestamp(Timestamp t);

/// Filename-safe basic form, `20220224T050000Z`.
std::string format_timestamp_compact(Timestamp t);

Date parse_date(std::string_view text);
std::string format_date(Date d);

Date date_of(Timestamp t);

/// Start of the epoch-aligned bin of width `interval` that contains `t`.
Timestamp floor_to_interval(Timestamp t, std::chrono::seconds interval);

/// Bin widths must tile an hour exactly so bins line up across days.
void require_interval_divides_hour(std::chrono::seconds interval);

}  // namespace trafficpm
