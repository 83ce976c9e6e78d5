/*
Copyright 2026 The DPR Simulation Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

// Plain-text formats.
//
// Partial rankings, one reviewer per line, best first, parentheses around a
// tie group:
//     3: 7 1 (4 9) 2
// Rankings: whitespace-separated ids, best first.
// Constraints, one reviewer per line:
//     3: 3 8 12
// Blank lines and lines starting with '#' are ignored everywhere.

#pragma once

#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dpr/errors.hpp"
#include "dpr/ranking.hpp"

namespace dpr::text {

namespace detail {

inline bool skippable(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

inline std::uint64_t parse_uint(const std::string& token, std::size_t line_no) {
  if (token.empty() ||
      token.find_first_not_of("0123456789") != std::string::npos)
    throw InputError("line " + std::to_string(line_no) + ": bad id '" + token +
                     "'");
  return std::stoull(token);
}

// Splits "<reviewer>: rest" into the reviewer id and the remainder.
inline std::pair<std::size_t, std::string> split_reviewer(
    const std::string& line, std::size_t line_no) {
  const auto colon = line.find(':');
  if (colon == std::string::npos)
    throw InputError("line " + std::to_string(line_no) +
                     ": expected 'reviewer_id: ...'");
  std::istringstream head(line.substr(0, colon));
  std::string token;
  head >> token;
  std::string extra;
  if (head >> extra)
    throw InputError("line " + std::to_string(line_no) +
                     ": junk before ':'");
  return {static_cast<std::size_t>(parse_uint(token, line_no)),
          line.substr(colon + 1)};
}

}  // namespace detail

inline PartialRanking parse_partial_line(const std::string& line,
                                         std::size_t line_no = 1) {
  auto [reviewer, rest] = detail::split_reviewer(line, line_no);
  PartialRanking partial{reviewer, {}};
  std::vector<ProposalId> group;
  bool in_group = false;
  std::string token;
  auto flush_token = [&] {
    if (token.empty()) return;
    const auto id = static_cast<ProposalId>(detail::parse_uint(token, line_no));
    if (in_group)
      group.push_back(id);
    else
      partial.groups.push_back({id});
    token.clear();
  };
  for (char c : rest) {
    if (c == '(') {
      flush_token();
      if (in_group)
        throw InputError("line " + std::to_string(line_no) +
                         ": nested '('");
      in_group = true;
    } else if (c == ')') {
      flush_token();
      if (!in_group || group.empty())
        throw InputError("line " + std::to_string(line_no) +
                         ": unbalanced or empty tie group");
      partial.groups.push_back(std::move(group));
      group.clear();
      in_group = false;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      flush_token();
    } else {
      token.push_back(c);
    }
  }
  flush_token();
  if (in_group)
    throw InputError("line " + std::to_string(line_no) + ": unclosed '('");
  return partial;
}

inline std::vector<PartialRanking> read_partials(std::istream& in) {
  std::vector<PartialRanking> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    out.push_back(parse_partial_line(line, line_no));
  }
  return out;
}

inline void write_partial(std::ostream& out, const PartialRanking& partial) {
  out << partial.reviewer << ':';
  for (const auto& group : partial.groups) {
    if (group.size() == 1) {
      out << ' ' << group.front();
      continue;
    }
    out << " (";
    for (std::size_t k = 0; k < group.size(); ++k)
      out << (k ? " " : "") << group[k];
    out << ')';
  }
  out << '\n';
}

inline void write_partials(std::ostream& out,
                           const std::vector<PartialRanking>& partials) {
  for (const auto& p : partials) write_partial(out, p);
}

inline Ranking parse_ranking(const std::string& text) {
  std::istringstream in(text);
  std::vector<ProposalId> order;
  std::string token;
  while (in >> token)
    order.push_back(static_cast<ProposalId>(detail::parse_uint(token, 1)));
  return Ranking(std::move(order));
}

inline void write_ranking(std::ostream& out, const Ranking& r) {
  for (std::size_t k = 0; k < r.size(); ++k) out << (k ? " " : "") << r[k];
  out << '\n';
}

// forbidden[reviewer] = ids that reviewer may not review. Reviewers not
// mentioned get an empty set here; self-exclusion is added by the assignment
// layer.
inline std::vector<std::vector<ProposalId>> read_constraints(std::istream& in,
                                                             std::size_t n) {
  std::vector<std::vector<ProposalId>> forbidden(n);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    auto [reviewer, rest] = detail::split_reviewer(line, line_no);
    if (reviewer >= n)
      throw InputError("line " + std::to_string(line_no) + ": reviewer " +
                       std::to_string(reviewer) + " out of range");
    std::istringstream ids(rest);
    std::string token;
    while (ids >> token) {
      const auto id = detail::parse_uint(token, line_no);
      if (id >= n)
        throw InputError("line " + std::to_string(line_no) + ": proposal " +
                         token + " out of range");
      forbidden[reviewer].push_back(static_cast<ProposalId>(id));
    }
  }
  return forbidden;
}

}  // namespace dpr::text
