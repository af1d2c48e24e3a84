// Copyright 2026 The AML Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AMLWB_DATE_HPP_
#define AMLWB_DATE_HPP_

#include <chrono>
#include <string>
#include <string_view>

namespace amlwb {

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

/// ISO-8601 calendar date, YYYY-MM-DD. Throws MalformedRecordError.
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// ISO-8601 YYYY-MM-DDTHH:MM:SS (no zone, UTC implied). A bare date parses
/// as midnight.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

/// Whole calendar months from `from` to `to`, floored: the month count is
/// reduced by one when the day-of-month of `to` is earlier than that of
/// `from`. Negative when `to` precedes `from`.
int whole_months_between(Date from, Date to);

/// Same calendar day `months` later, clamped to the last day of the month.
Date add_months(Date d, int months);

}  // namespace amlwb

#endif  // AMLWB_DATE_HPP_
