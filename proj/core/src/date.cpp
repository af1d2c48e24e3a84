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

#include "amlwb/date.hpp"

#include <charconv>
#include <cstdio>

#include "amlwb/error.hpp"

namespace amlwb {

using namespace std::chrono;

namespace {

int parse_field(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  auto first = text.data() + pos;
  auto last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw MalformedRecordError("bad date/time field in '" + std::string(text) +
                               "'");
  }
  return value;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw MalformedRecordError("expected YYYY-MM-DD, got '" +
                               std::string(text) + "'");
  }
  year_month_day ymd{year{parse_field(text, 0, 4)},
                     month{static_cast<unsigned>(parse_field(text, 5, 2))},
                     day{static_cast<unsigned>(parse_field(text, 8, 2))}};
  if (!ymd.ok()) {
    throw MalformedRecordError("invalid calendar date '" + std::string(text) +
                               "'");
  }
  return sys_days{ymd};
}

std::string format_date(Date d) {
  year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  if (text.size() == 10) return Timestamp{parse_date(text)};
  if (text.size() != 19 || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':') {
    throw MalformedRecordError("expected YYYY-MM-DDTHH:MM:SS, got '" +
                               std::string(text) + "'");
  }
  Date d = parse_date(text.substr(0, 10));
  int h = parse_field(text, 11, 2);
  int m = parse_field(text, 14, 2);
  int s = parse_field(text, 17, 2);
  if (h > 23 || m > 59 || s > 59) {
    throw MalformedRecordError("invalid time of day in '" + std::string(text) +
                               "'");
  }
  return Timestamp{d} + hours{h} + minutes{m} + seconds{s};
}

std::string format_timestamp(Timestamp t) {
  Date d = floor<days>(t);
  auto rem = t - Timestamp{d};
  hh_mm_ss hms{rem};
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%02ld:%02ld:%02ld",
                static_cast<long>(hms.hours().count()),
                static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return format_date(d) + buf;
}

int whole_months_between(Date from, Date to) {
  year_month_day a{from};
  year_month_day b{to};
  int months = (static_cast<int>(b.year()) - static_cast<int>(a.year())) * 12 +
               (static_cast<int>(static_cast<unsigned>(b.month())) -
                static_cast<int>(static_cast<unsigned>(a.month())));
  if (months > 0 && b.day() < a.day()) --months;
  if (months < 0 && b.day() > a.day()) ++months;
  return months;
}

Date add_months(Date d, int months) {
  year_month_day ymd{d};
  year_month target = year_month{ymd.year(), ymd.month()} + std::chrono::months{months};
  auto last = year_month_day_last{target.year(), month_day_last{target.month()}};
  day dd = ymd.day() > last.day() ? last.day() : ymd.day();
  return sys_days{year_month_day{target.year(), target.month(), dd}};
}

}  // namespace amlwb
