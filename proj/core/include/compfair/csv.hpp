/*
 * Copyright 2026 The compfair Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef COMPFAIR_CSV_HPP_
#define COMPFAIR_CSV_HPP_

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace compfair::csv {

// RFC 4180 fields: quoted fields may contain commas and doubled quotes.
// Quoted newlines are not supported.
std::vector<std::string> split_line(std::string_view line);

std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Fixed-point formatting, e.g. format_fixed(67.083, 2) == "67.08".
std::string format_fixed(double value, int decimals);

}  // namespace compfair::csv

#endif  // COMPFAIR_CSV_HPP_
