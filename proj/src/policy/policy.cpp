// Copyright 2026 The ctxpol Authors
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

#include <algorithm>
#include <limits>

#include "ctxpol/errors.hpp"
#include "ctxpol/policy.hpp"

namespace ctxpol {

std::string_view to_string(PolicyPhase phase) {
  return phase == PolicyPhase::Pre ? "pre" : "post";
}

std::string_view to_string(SelectionKind kind) {
  switch (kind) {
    case SelectionKind::ApiSpecific: return "api-specific";
    case SelectionKind::Generic: return "generic";
    case SelectionKind::Default: return "default";
    case SelectionKind::Empty: return "none";
  }
  return "?";
}

ApiId::ApiId(std::string name) : name_(std::move(name)) {
  if (name_.empty()) throw BuildError("API identifier must not be empty");
}

// ---------------------------------------------------------------------------
// Selectors

SelectorEntry SelectorEntry::column(FieldUse field) {
  if (field.column.table.empty() || field.column.column.empty()) {
    throw BuildError("selector column needs table and column names");
  }
  SelectorEntry e;
  e.field_ = std::move(field);
  return e;
}

SelectorEntry SelectorEntry::wildcard(std::string table) {
  if (table.empty()) throw BuildError("wildcard selector needs a table name");
  SelectorEntry e;
  e.wildcard_ = true;
  e.field_.column.table = std::move(table);
  return e;
}

SelectorEntry SelectorEntry::parse(std::string_view text) {
  Transform t = Transform::None;
  std::string_view body = text;
  if (auto open = text.find('('); open != std::string_view::npos) {
    if (text.back() != ')') throw BuildError("bad selector '" + std::string(text) + "'");
    t = parse_transform(text.substr(0, open));
    body = text.substr(open + 1, text.size() - open - 2);
  }
  auto dot = body.find('.');
  if (dot == std::string_view::npos) {
    throw BuildError("selector '" + std::string(text) + "' must be Table.column");
  }
  std::string table(body.substr(0, dot));
  std::string column(body.substr(dot + 1));
  if (column == "*") {
    if (t != Transform::None) throw BuildError("wildcard selector cannot carry a transform");
    return wildcard(std::move(table));
  }
  return SelectorEntry::column(FieldUse{{std::move(table), std::move(column)}, t});
}

std::string SelectorEntry::to_string() const {
  if (wildcard_) return field_.column.table + ".*";
  return field_.to_string();
}

Selector::Selector(std::initializer_list<std::string_view> specs) {
  std::vector<SelectorEntry> entries;
  for (auto s : specs) entries.push_back(SelectorEntry::parse(s));
  *this = Selector(std::move(entries));
}

Selector::Selector(std::vector<SelectorEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw BuildError("selector must not be empty");
  std::sort(entries_.begin(), entries_.end());
  if (std::adjacent_find(entries_.begin(), entries_.end()) != entries_.end()) {
    throw BuildError("selector has duplicate entries");
  }
}

bool Selector::covers_column(const ColumnRef& column) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const SelectorEntry& e) {
    return e.is_wildcard() ? e.table() == column.table : e.field().column == column;
  });
}

std::string Selector::to_string() const {
  std::string out;
  for (const auto& e : entries_) {
    if (!out.empty()) out += ", ";
    out += e.to_string();
  }
  return out;
}

namespace {

// lower_bound that probes 1, 2, 4, ... elements ahead of `first` before
// bisecting, so an ascending run of lookups costs O(k + log n).
template <class It, class T, class Less>
It gallop(It first, It last, const T& value, Less less) {
  std::ptrdiff_t step = 1;
  while (first != last) {
    const std::ptrdiff_t span = std::min(step, static_cast<std::ptrdiff_t>(last - first));
    It probe = first + (span - 1);
    if (!less(*probe, value)) return std::lower_bound(first, probe + 1, value, less);
    first = probe + 1;
    step *= 2;
  }
  return last;
}

}  // namespace

bool selector_matches(const Selector& selector, std::span<const FieldUse> fields) {
  if (fields.empty()) return false;
  // Column entries come first and share the field ordering, so each search
  // resumes where the previous one stopped. Wildcards sort last.
  auto from = fields.begin();
  for (const auto& e : selector.entries()) {
    if (e.is_wildcard()) {
      auto it = std::lower_bound(fields.begin(), fields.end(), e.table(),
                                 [](const FieldUse& f, const std::string& t) { return f.column.table < t; });
      if (it == fields.end() || it->column.table != e.table()) return false;
      continue;
    }
    if (e.field().transform == Transform::None) {
      auto it = gallop(from, fields.end(), e.field().column,
                       [](const FieldUse& f, const ColumnRef& c) { return f.column < c; });
      if (it == fields.end() || it->column != e.field().column) return false;
      from = it;
    } else {
      auto it = gallop(from, fields.end(), e.field(), std::less<>());
      if (it == fields.end() || *it != e.field()) return false;
      from = it;
    }
  }
  return true;
}

const Value& UserContext::attribute(std::string_view name) const {
  static const Value kNull;
  auto it = attributes.find(name);
  return it == attributes.end() ? kNull : it->second;
}

// ---------------------------------------------------------------------------
// Registry and selection

bool Policy::lists_api(const ApiId& api) const {
  return apis && std::find(apis->begin(), apis->end(), api) != apis->end();
}

const Policy& PolicyRegistry::add(Policy p) {
  if (sealed_) throw RegistryError("policy '" + p.name + "' registered after seal");
  if (p.phase == PolicyPhase::Pre ? !p.pre : !p.post) {
    throw RegistryError("policy '" + p.name + "' has no body for its phase");
  }
  if (p.apis && p.apis->empty()) throw RegistryError("policy '" + p.name + "' has an empty API list");
  p.registration_index = policies_.size();
  policies_.push_back(std::move(p));
  return policies_.back();
}

const Policy& PolicyRegistry::add_pre(std::string name, Selector selector, PreBody body,
                                      std::optional<std::vector<ApiId>> apis) {
  return add(Policy{std::move(name), std::move(selector), PolicyPhase::Pre, std::move(apis),
                    std::move(body), nullptr, 0});
}

const Policy& PolicyRegistry::add_post(std::string name, Selector selector, PostBody body,
                                       std::optional<std::vector<ApiId>> apis) {
  return add(Policy{std::move(name), std::move(selector), PolicyPhase::Post, std::move(apis),
                    nullptr, std::move(body), 0});
}

Query default_deny(const Query& q) { return q.none(); }

const Policy& default_deny_policy() {
  static const Policy kDefault{
      "default-deny",
      Selector(std::vector<SelectorEntry>{SelectorEntry::wildcard("*")}),
      PolicyPhase::Pre,
      std::nullopt,
      [](const Query& q, const RequestContext&, const PrivilegedAccessor&) { return default_deny(q); },
      nullptr,
      std::numeric_limits<std::size_t>::max()};
  return kDefault;
}

Selection get_policies(const PolicyRegistry& registry, std::span<const FieldUse> fields,
                       const ApiId& api, PolicyPhase phase, bool use_default) {
  if (!registry.sealed()) throw RegistryError("policy selection on an unsealed registry");
  Selection specific{SelectionKind::ApiSpecific, {}};
  Selection generic{SelectionKind::Generic, {}};
  for (const auto& p : registry.policies()) {
    if (p.phase != phase || !selector_matches(p.selector, fields)) continue;
    if (!p.api_specific()) {
      generic.policies.push_back(&p);
    } else if (p.lists_api(api)) {
      specific.policies.push_back(&p);
    }
  }
  if (!specific.policies.empty()) return specific;
  if (!generic.policies.empty()) return generic;
  if (use_default) return Selection{SelectionKind::Default, {&default_deny_policy()}};
  return Selection{};
}

}  // namespace ctxpol
