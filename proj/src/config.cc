// Copyright 2026 The byzdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "byzdp/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "byzdp/report.h"

namespace byzdp {
namespace {

absl::Status FieldError(absl::string_view key, absl::string_view why) {
  return absl::InvalidArgumentError(absl::StrCat("config field '", key, "': ", why));
}

absl::StatusOr<double> ToDouble(absl::string_view key, absl::string_view text) {
  double v = 0.0;
  absl::string_view t = absl::StripAsciiWhitespace(text);
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    return FieldError(key, absl::StrCat("expected a number, got '", text, "'"));
  }
  return v;
}

absl::StatusOr<std::int64_t> ToInt(absl::string_view key, absl::string_view text) {
  std::int64_t v = 0;
  absl::string_view t = absl::StripAsciiWhitespace(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    return FieldError(key, absl::StrCat("expected an integer, got '", text, "'"));
  }
  return v;
}

absl::StatusOr<int> ToPositiveOrZeroInt(absl::string_view key,
                                        absl::string_view text) {
  absl::StatusOr<std::int64_t> v = ToInt(key, text);
  if (!v.ok()) return v.status();
  if (*v < 0 || *v > std::numeric_limits<int>::max()) {
    return FieldError(key, "out of range");
  }
  return static_cast<int>(*v);
}

absl::StatusOr<bool> ToBool(absl::string_view key, absl::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  return FieldError(key, "expected true or false");
}

bool IsList(absl::string_view value) {
  return !value.empty() && value.front() == '[';
}

// Splits "[a, b, 1..3]" into items, expanding integer ranges when allowed.
absl::StatusOr<std::vector<std::string>> ListItems(absl::string_view key,
                                                   absl::string_view value,
                                                   bool allow_ranges) {
  absl::string_view body = value;
  if (IsList(body)) {
    if (body.back() != ']') return FieldError(key, "unterminated list");
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> items;
  for (absl::string_view raw : absl::StrSplit(body, ',')) {
    absl::string_view item = absl::StripAsciiWhitespace(raw);
    if (item.empty()) return FieldError(key, "empty list item");
    const std::size_t dots = item.find("..");
    if (dots != absl::string_view::npos) {
      if (!allow_ranges) return FieldError(key, "ranges need integer values");
      absl::StatusOr<std::int64_t> lo = ToInt(key, item.substr(0, dots));
      absl::StatusOr<std::int64_t> hi = ToInt(key, item.substr(dots + 2));
      if (!lo.ok()) return lo.status();
      if (!hi.ok()) return hi.status();
      if (*hi < *lo) return FieldError(key, "empty range");
      if (*hi - *lo > 100000) return FieldError(key, "range too long");
      for (std::int64_t v = *lo; v <= *hi; ++v) items.push_back(absl::StrCat(v));
      continue;
    }
    items.emplace_back(item);
  }
  if (items.empty()) return FieldError(key, "empty list");
  return items;
}

absl::StatusOr<std::optional<double>> ToEpsilon(absl::string_view key,
                                                absl::string_view text) {
  if (text == "none") return std::optional<double>();
  absl::StatusOr<double> v = ToDouble(key, text);
  if (!v.ok()) return v.status();
  return std::optional<double>(*v);
}

std::string RenderOptional(const std::optional<double>& v) {
  return v.has_value() ? FormatDouble(*v) : "none";
}

}  // namespace

absl::StatusOr<ConfigFile> ParseConfig(absl::string_view text) {
  std::map<std::string, std::string, std::less<>> entries;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != absl::string_view::npos) line = line.substr(0, hash);
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(
          absl::StrCat("config line ", line_no, ": expected 'key = value'"));
    }
    std::string key(absl::StripAsciiWhitespace(line.substr(0, eq)));
    std::string value(absl::StripAsciiWhitespace(line.substr(eq + 1)));
    if (key.empty() || value.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("config line ", line_no, ": empty key or value"));
    }
    if (!entries.emplace(key, value).second) {
      return FieldError(key, "duplicate key");
    }
  }

  ConfigFile cfg;
  RunConfig& run = cfg.run;
  std::string schedule_name = "inv_sqrt";
  double gamma = 0.5;
  std::optional<double> zeta;
  bool delta_set = false;
  double delta = 1e-5;
  std::optional<double> epsilon;

  using Handler = std::function<absl::Status(absl::string_view, absl::string_view)>;
  auto scalar_double = [](double& target) -> Handler {
    return [&target](absl::string_view key, absl::string_view v) -> absl::Status {
      absl::StatusOr<double> d = ToDouble(key, v);
      if (!d.ok()) return d.status();
      target = *d;
      return absl::OkStatus();
    };
  };
  auto scalar_int = [](int& target) -> Handler {
    return [&target](absl::string_view key, absl::string_view v) -> absl::Status {
      absl::StatusOr<int> d = ToPositiveOrZeroInt(key, v);
      if (!d.ok()) return d.status();
      target = *d;
      return absl::OkStatus();
    };
  };
  auto optional_double = [](std::optional<double>& target) -> Handler {
    return [&target](absl::string_view key, absl::string_view v) -> absl::Status {
      absl::StatusOr<double> d = ToDouble(key, v);
      if (!d.ok()) return d.status();
      target = *d;
      return absl::OkStatus();
    };
  };

  int m = static_cast<int>(run.data.m);
  int dataset_seed = 0;
  int mda_cap = static_cast<int>(run.mda_subset_cap);

  std::map<std::string, Handler, std::less<>> scalars = {
      {"model",
       [&](absl::string_view key, absl::string_view v) -> absl::Status {
         absl::StatusOr<ModelKind> k = ParseModelKind(v);
         if (!k.ok()) return FieldError(key, k.status().message());
         run.model.kind = *k;
         return absl::OkStatus();
       }},
      {"lambda", scalar_double(run.model.lambda)},
      {"hessian_diagonal",
       [&](absl::string_view key, absl::string_view v) -> absl::Status {
         absl::StatusOr<std::vector<std::string>> items = ListItems(key, v, false);
         if (!items.ok()) return items.status();
         run.model.hessian_diagonal.clear();
         for (const std::string& item : *items) {
           absl::StatusOr<double> d = ToDouble(key, item);
           if (!d.ok()) return d.status();
           run.model.hessian_diagonal.push_back(*d);
         }
         return absl::OkStatus();
       }},
      {"hidden", scalar_int(run.model.hidden)},
      {"dataset",
       [&](absl::string_view key, absl::string_view v) -> absl::Status {
         absl::StatusOr<DatasetKind> k = ParseDatasetKind(v);
         if (!k.ok()) return FieldError(key, k.status().message());
         run.data.kind = *k;
         return absl::OkStatus();
       }},
      {"m", scalar_int(m)},
      {"features", scalar_int(run.data.features)},
      {"dataset_seed", scalar_int(dataset_seed)},
      {"center", scalar_double(run.data.center)},
      {"spread", scalar_double(run.data.spread)},
      {"separation", scalar_double(run.data.separation)},
      {"label_noise", scalar_double(run.data.label_noise)},
      {"dataset_path",
       [&](absl::string_view, absl::string_view v) -> absl::Status {
         run.data.path = std::string(v);
         return absl::OkStatus();
       }},
      {"csv_has_label",
       [&](absl::string_view key, absl::string_view v) -> absl::Status {
         absl::StatusOr<bool> b = ToBool(key, v);
         if (!b.ok()) return b.status();
         run.data.csv_has_label = *b;
         return absl::OkStatus();
       }},
      {"n", scalar_int(run.n)},
      {"mda_subset_cap", scalar_int(mda_cap)},
      {"zeta", optional_double(zeta)},
      {"delta",
       [&](absl::string_view key, absl::string_view v) -> absl::Status {
         absl::StatusOr<double> d = ToDouble(key, v);
         if (!d.ok()) return d.status();
         delta = *d;
         delta_set = true;
         return absl::OkStatus();
       }},
      {"clip", scalar_double(run.clip)},
      {"T", scalar_int(run.rounds)},
      {"schedule",
       [&](absl::string_view, absl::string_view v) -> absl::Status {
         schedule_name = std::string(v);
         return absl::OkStatus();
       }},
      {"gamma", scalar_double(gamma)},
      {"momentum", scalar_double(run.momentum)},
      {"eval_every", scalar_int(run.eval_every)},
      {"worker_threads", scalar_int(run.worker_threads)},
      {"delta_slack", scalar_double(cfg.delta_slack)},
      {"upsilon", optional_double(cfg.upsilon)},
      {"alpha", optional_double(cfg.alpha)},
      {"mu", optional_double(cfg.mu)},
  };

  // Grid-capable keys: a scalar sets the base value, a list sets the axis.
  std::map<std::string, Handler, std::less<>> grid_keys = {
      {"b",
       [&](absl::string_view key, absl::string_view v) -> absl::Status {
         absl::StatusOr<std::vector<std::string>> items = ListItems(key, v, true);
         if (!items.ok()) return items.status();
         for (const std::string& item : *items) {
           absl::StatusOr<int> b = ToPositiveOrZeroInt(key, item);
           if (!b.ok()) return b.status();
           cfg.grid.b.push_back(*b);
         }
         run.b = cfg.grid.b.front();
         return absl::OkStatus();
       }},
      {"epsilon",
       [&](absl::string_view key, absl::string_view v) -> absl::Status {
         absl::StatusOr<std::vector<std::string>> items = ListItems(key, v, false);
         if (!items.ok()) return items.status();
         for (const std::string& item : *items) {
           absl::StatusOr<std::optional<double>> e = ToEpsilon(key, item);
           if (!e.ok()) return e.status();
           cfg.grid.epsilon.push_back(*e);
         }
         epsilon = cfg.grid.epsilon.front();
         return absl::OkStatus();
       }},
      {"gar",
       [&](absl::string_view key, absl::string_view v) -> absl::Status {
         absl::StatusOr<std::vector<std::string>> items = ListItems(key, v, false);
         if (!items.ok()) return items.status();
         for (const std::string& item : *items) {
           absl::StatusOr<GarRule> g = ParseGarRule(item);
           if (!g.ok()) return FieldError(key, g.status().message());
           cfg.grid.gar.push_back(*g);
         }
         run.gar = cfg.grid.gar.front();
         return absl::OkStatus();
       }},
      {"attack",
       [&](absl::string_view key, absl::string_view v) -> absl::Status {
         absl::StatusOr<std::vector<std::string>> items = ListItems(key, v, false);
         if (!items.ok()) return items.status();
         for (const std::string& item : *items) {
           absl::StatusOr<AttackKind> a = ParseAttackKind(item);
           if (!a.ok()) return FieldError(key, a.status().message());
           cfg.grid.attack.push_back(*a);
         }
         run.attack.kind = cfg.grid.attack.front();
         return absl::OkStatus();
       }},
      {"f",
       [&](absl::string_view key, absl::string_view v) -> absl::Status {
         absl::StatusOr<std::vector<std::string>> items = ListItems(key, v, true);
         if (!items.ok()) return items.status();
         for (const std::string& item : *items) {
           absl::StatusOr<int> f = ToPositiveOrZeroInt(key, item);
           if (!f.ok()) return f.status();
           cfg.grid.f.push_back(*f);
         }
         run.f = cfg.grid.f.front();
         return absl::OkStatus();
       }},
      {"seed",
       [&](absl::string_view key, absl::string_view v) -> absl::Status {
         absl::StatusOr<std::vector<std::string>> items = ListItems(key, v, true);
         if (!items.ok()) return items.status();
         for (const std::string& item : *items) {
           absl::StatusOr<std::int64_t> s = ToInt(key, item);
           if (!s.ok()) return s.status();
           if (*s < 0) return FieldError(key, "seed must be >= 0");
           cfg.grid.seed.push_back(static_cast<std::uint64_t>(*s));
         }
         run.master_seed = cfg.grid.seed.front();
         return absl::OkStatus();
       }},
  };

  for (const auto& [key, value] : entries) {
    if (auto it = grid_keys.find(key); it != grid_keys.end()) {
      if (absl::Status s = it->second(key, value); !s.ok()) return s;
      if (IsList(value) || value.find("..") != std::string::npos) {
        cfg.has_grid = true;
      }
      continue;
    }
    auto it = scalars.find(key);
    if (it == scalars.end()) return FieldError(key, "unknown key");
    if (IsList(value) && key != "hessian_diagonal") {
      return FieldError(key, "lists are only allowed for grid keys");
    }
    if (absl::Status s = it->second(key, value); !s.ok()) return s;
  }

  // A scalar value for a grid key sets the base config only.
  for (const char* axis_key : {"b", "epsilon", "gar", "attack", "f", "seed"}) {
    auto it = entries.find(axis_key);
    if (it == entries.end()) continue;
    if (IsList(it->second) || it->second.find("..") != std::string::npos) {
      continue;
    }
    const absl::string_view k(axis_key);
    if (k == "b") cfg.grid.b.clear();
    if (k == "epsilon") cfg.grid.epsilon.clear();
    if (k == "gar") cfg.grid.gar.clear();
    if (k == "attack") cfg.grid.attack.clear();
    if (k == "f") cfg.grid.f.clear();
    if (k == "seed") cfg.grid.seed.clear();
  }
  cfg.grid.delta = delta;

  run.data.m = static_cast<std::size_t>(m);
  run.data.seed = static_cast<std::uint64_t>(dataset_seed);
  run.mda_subset_cap = static_cast<std::uint64_t>(mda_cap);
  run.attack = AttackSpec::WithDefaults(run.attack.kind, zeta);
  if (epsilon.has_value()) {
    run.privacy = EpsilonDelta{*epsilon, delta};
  } else if (delta_set && !entries.contains("epsilon")) {
    return FieldError("delta", "set without epsilon");
  }
  absl::StatusOr<Schedule> schedule = ParseSchedule(schedule_name, gamma);
  if (!schedule.ok()) return FieldError("schedule", schedule.status().message());
  run.schedule = *schedule;
  if (run.data.kind == DatasetKind::kCsv && run.data.path.empty()) {
    return FieldError("dataset_path", "required when dataset = csv");
  }
  if (!(cfg.delta_slack > 0.0 && cfg.delta_slack < 1.0)) {
    return FieldError("delta_slack", "must lie in (0, 1)");
  }
  if (cfg.upsilon.has_value() && !(*cfg.upsilon >= 0.0)) {
    return FieldError("upsilon", "must be >= 0");
  }
  // Sweep cells are validated one by one so that a bad cell cannot sink the
  // whole grid.
  if (!cfg.has_grid) {
    if (absl::Status s = ValidateRunConfig(run); !s.ok()) return s;
  }
  return cfg;
}

absl::StatusOr<ConfigFile> LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open config '", path, "'"));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str());
}

std::string ResolvedConfig(const RunConfig& c) {
  std::vector<std::string> lines;
  auto add = [&lines](absl::string_view key, const std::string& value) {
    lines.push_back(absl::StrCat(key, " = ", value));
  };
  add("model", std::string(ModelKindName(c.model.kind)));
  add("lambda", FormatDouble(c.model.lambda));
  if (!c.model.hessian_diagonal.empty()) {
    std::vector<std::string> diag;
    for (double v : c.model.hessian_diagonal) diag.push_back(FormatDouble(v));
    add("hessian_diagonal", absl::StrCat("[", absl::StrJoin(diag, ", "), "]"));
  }
  if (c.model.kind == ModelKind::kMlp1) add("hidden", absl::StrCat(c.model.hidden));
  add("dataset", std::string(DatasetKindName(c.data.kind)));
  switch (c.data.kind) {
    case DatasetKind::kTargets:
      add("m", absl::StrCat(c.data.m));
      add("features", absl::StrCat(c.data.features));
      add("dataset_seed", absl::StrCat(c.data.seed));
      add("center", FormatDouble(c.data.center));
      add("spread", FormatDouble(c.data.spread));
      break;
    case DatasetKind::kBlobs:
      add("m", absl::StrCat(c.data.m));
      add("features", absl::StrCat(c.data.features));
      add("dataset_seed", absl::StrCat(c.data.seed));
      add("separation", FormatDouble(c.data.separation));
      add("spread", FormatDouble(c.data.spread));
      add("label_noise", FormatDouble(c.data.label_noise));
      break;
    case DatasetKind::kCsv:
      add("dataset_path", c.data.path);
      add("csv_has_label", c.data.csv_has_label ? "true" : "false");
      break;
  }
  add("n", absl::StrCat(c.n));
  add("f", absl::StrCat(c.f));
  add("gar", std::string(GarRuleName(c.gar)));
  if (c.gar == GarRule::kMda) add("mda_subset_cap", absl::StrCat(c.mda_subset_cap));
  add("attack", std::string(AttackKindName(c.attack.kind)));
  add("zeta", FormatDouble(c.attack.zeta));
  add("epsilon", RenderOptional(c.privacy.has_value()
                                    ? std::optional<double>(c.privacy->epsilon)
                                    : std::nullopt));
  if (c.privacy.has_value()) add("delta", FormatDouble(c.privacy->delta));
  add("clip", FormatDouble(c.clip));
  add("b", absl::StrCat(c.b));
  add("T", absl::StrCat(c.rounds));
  add("schedule", c.schedule.kind == ScheduleKind::kConstant ? "constant" : "inv_sqrt");
  if (c.schedule.kind == ScheduleKind::kConstant) add("gamma", FormatDouble(c.schedule.gamma));
  add("momentum", FormatDouble(c.momentum));
  add("seed", absl::StrCat(c.master_seed));
  add("eval_every", absl::StrCat(c.eval_every));
  return absl::StrCat(absl::StrJoin(lines, "\n"), "\n");
}

std::string CellId(const RunConfig& config) {
  const std::string text = ResolvedConfig(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace byzdp
