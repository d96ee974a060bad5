#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace evcp {

using Date = std::chrono::year_month_day;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Returns nullopt on
/// anything else, including impossible dates such as 2021-02-30.
std::optional<Date> parse_date(std::string_view text);

std::string format_date(const Date& date);

}  // namespace evcp
