#pragma once

// Tiered ranking from pairwise verdicts (one metric, one horizon).
//
// Decisive equivalences union models into groups; decisive dominances order
// the groups; tier = longest dominance-path depth from the top. Three kinds
// of contradiction can appear, and each is surfaced as an "intersection"
// entry instead of being resolved silently:
//   - a model on an equivalence chain whose endpoints dominate each other
//     (the classic A ~ B ~ C with A > C): the chain's interior models are
//     flagged as sitting at the intersection of the split groups
//   - dominance cycles: every member of the cycle is flagged
//   - equivalence groups whose members' external dominances form a cycle at
//     group level: those groups' members are flagged
// Flagged models are excluded from tiers and listed with the groups they
// link to. All processing orders are canonical (input model order), so the
// result is independent of decision order.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lobbench/bayes.hpp"
#include "lobbench/common.hpp"

namespace lobbench {

struct RankingGroup {
  std::vector<std::string> models;  // canonical order
  int tier = 0;
};

struct IntersectionEntry {
  std::string model;
  std::string reason;
  std::vector<int> group_indices;  // groups this model is decisively linked to
};

struct Ranking {
  std::string metric;
  int horizon = 0;
  std::vector<RankingGroup> groups;  // sorted by (tier, canonical first member)
  std::vector<IntersectionEntry> intersections;
  int tier_count = 0;

  int tier_of(const std::string& model) const {
    for (const auto& g : groups)
      for (const auto& m : g.models)
        if (m == model) return g.tier;
    return -1;  // flagged or unknown
  }
};

namespace detail {

struct RelGraph {
  std::size_t n = 0;
  std::vector<std::vector<bool>> dom;  // direct dominance, winner -> loser
  std::vector<std::vector<bool>> eq;   // decisive equivalence (symmetric)
  std::vector<bool> active;

  explicit RelGraph(std::size_t n)
      : n(n),
        dom(n, std::vector<bool>(n, false)),
        eq(n, std::vector<bool>(n, false)),
        active(n, true) {}

  std::vector<std::vector<bool>> dom_closure() const {
    std::vector<std::vector<bool>> c = dom;
    for (std::size_t i = 0; i < n; ++i)
      if (!active[i])
        for (std::size_t j = 0; j < n; ++j) c[i][j] = c[j][i] = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k]) continue;
      for (std::size_t i = 0; i < n; ++i) {
        if (!c[i][k]) continue;
        for (std::size_t j = 0; j < n; ++j)
          if (c[k][j]) c[i][j] = true;
      }
    }
    return c;
  }

  // Connected equivalence components among active models, canonical order.
  std::vector<std::vector<std::size_t>> eq_components() const {
    std::vector<std::vector<std::size_t>> comps;
    std::vector<bool> seen(n, false);
    for (std::size_t s = 0; s < n; ++s) {
      if (!active[s] || seen[s]) continue;
      std::vector<std::size_t> comp{s};
      seen[s] = true;
      for (std::size_t at = 0; at < comp.size(); ++at) {
        for (std::size_t j = 0; j < n; ++j) {
          if (active[j] && !seen[j] && eq[comp[at]][j]) {
            seen[j] = true;
            comp.push_back(j);
          }
        }
      }
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
    return comps;
  }

  // All interior vertices of simple equivalence paths from u to v.
  std::vector<std::size_t> eq_path_interiors(std::size_t u, std::size_t v) const {
    std::vector<bool> on_path(n, false);
    std::vector<std::size_t> path{u};
    std::vector<bool> in_path(n, false);
    in_path[u] = true;
    dfs_paths(u, v, path, in_path, on_path);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i)
      if (on_path[i] && i != u && i != v) out.push_back(i);
    return out;
  }

private:
  void dfs_paths(std::size_t at, std::size_t target, std::vector<std::size_t>& path,
                 std::vector<bool>& in_path, std::vector<bool>& on_path) const {
    if (at == target) {
      for (const std::size_t x : path) on_path[x] = true;
      return;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || in_path[j] || !eq[at][j]) continue;
      path.push_back(j);
      in_path[j] = true;
      dfs_paths(j, target, path, in_path, on_path);
      in_path[j] = false;
      path.pop_back();
    }
  }
};

}  // namespace detail

inline Ranking build_ranking(const std::vector<std::string>& models,
                             const std::vector<PairDecision>& decisions,
                             const std::string& metric, int horizon) {
  const std::size_t n = models.size();
  if (n == 0) throw ConfigError("ranking: no models");
  auto index_of = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < n; ++i)
      if (models[i] == name) return i;
    throw ConfigError("ranking: decision references unknown model " + name);
  };

  detail::RelGraph g(n);
  for (const auto& d : decisions) {
    if (d.metric != metric || d.horizon != horizon) continue;
    const std::size_t a = index_of(d.model_a);
    const std::size_t b = index_of(d.model_b);
    if (a == b) throw ConfigError("ranking: self-comparison for " + d.model_a);
    if (!d.verdict.decisive) continue;
    switch (d.verdict.region) {
      case VerdictRegion::a_better: g.dom[a][b] = true; break;
      case VerdictRegion::b_better: g.dom[b][a] = true; break;
      case VerdictRegion::equivalent:
        g.eq[a][b] = g.eq[b][a] = true;
        break;
    }
  }

  std::vector<std::string> flag_reason(n);
  auto flag = [&](std::size_t i, const char* reason) {
    if (g.active[i]) {
      g.active[i] = false;
      flag_reason[i] = reason;
    }
  };

  // 1. dominance cycles
  {
    const auto c = g.dom_closure();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (c[i][j] && c[j][i]) {
          flag(i, "dominance_cycle");
          flag(j, "dominance_cycle");
        }
  }

  // 2. equivalence chains bridging a dominance relation
  while (true) {
    const auto closure = g.dom_closure();
    const auto comps = g.eq_components();
    std::vector<std::size_t> to_flag;
    for (const auto& comp : comps) {
      for (std::size_t x = 0; x < comp.size(); ++x) {
        for (std::size_t y = x + 1; y < comp.size(); ++y) {
          const std::size_t u = comp[x], v = comp[y];
          if (!closure[u][v] && !closure[v][u]) continue;
          auto interiors = g.eq_path_interiors(u, v);
          if (interiors.empty()) {
            // direct equivalence edge contradicting a dominance chain:
            // both endpoints are inconsistent
            to_flag.push_back(u);
            to_flag.push_back(v);
          } else {
            to_flag.insert(to_flag.end(), interiors.begin(), interiors.end());
          }
        }
      }
    }
    if (to_flag.empty()) break;
    for (const std::size_t i : to_flag) flag(i, "equivalence_bridges_dominance");
  }

  // 3. group the survivors; check the group-level dominance DAG for cycles
  std::vector<std::vector<std::size_t>> comps;
  std::vector<std::vector<bool>> group_dom;
  while (true) {
    comps = g.eq_components();
    const auto closure = g.dom_closure();
    const std::size_t m = comps.size();
    group_dom.assign(m, std::vector<bool>(m, false));
    for (std::size_t gi = 0; gi < m; ++gi)
      for (std::size_t gj = 0; gj < m; ++gj) {
        if (gi == gj) continue;
        for (const std::size_t u : comps[gi])
          for (const std::size_t v : comps[gj])
            if (closure[u][v]) group_dom[gi][gj] = true;
      }
    // transitive closure at group level, then cycle scan
    auto gc = group_dom;
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t i = 0; i < m; ++i)
        if (gc[i][k])
          for (std::size_t j = 0; j < m; ++j)
            if (gc[k][j]) gc[i][j] = true;
    bool found_cycle = false;
    for (std::size_t i = 0; i < m && !found_cycle; ++i)
      for (std::size_t j = i + 1; j < m && !found_cycle; ++j)
        if (gc[i][j] && gc[j][i]) {
          for (const std::size_t u : comps[i]) flag(u, "group_dominance_cycle");
          for (const std::size_t u : comps[j]) flag(u, "group_dominance_cycle");
          found_cycle = true;
        }
    if (!found_cycle) break;
  }

  // 4. tiers = longest dominance-path depth over the group DAG
  const std::size_t m = comps.size();
  std::vector<int> tier(m, 0);
  bool changed = true;
  while (changed) {  // <= m passes over a DAG
    changed = false;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (group_dom[i][j] && tier[j] < tier[i] + 1) {
          tier[j] = tier[i] + 1;
          changed = true;
        }
  }

  Ranking out;
  out.metric = metric;
  out.horizon = horizon;
  std::vector<std::size_t> group_order(m);
  for (std::size_t i = 0; i < m; ++i) group_order[i] = i;
  std::sort(group_order.begin(), group_order.end(), [&](std::size_t a, std::size_t b) {
    if (tier[a] != tier[b]) return tier[a] < tier[b];
    return comps[a].front() < comps[b].front();
  });
  std::vector<int> new_index(m);
  for (std::size_t pos = 0; pos < m; ++pos) {
    const std::size_t gi = group_order[pos];
    new_index[gi] = static_cast<int>(pos);
    RankingGroup rg;
    rg.tier = tier[gi];
    for (const std::size_t u : comps[gi]) rg.models.push_back(models[u]);
    out.tier_count = std::max(out.tier_count, rg.tier + 1);
    out.groups.push_back(std::move(rg));
  }

  // 5. intersection entries for flagged models, linked to the groups that
  // contain models they hold a decisive relation with
  for (std::size_t i = 0; i < n; ++i) {
    if (g.active[i]) continue;
    IntersectionEntry e;
    e.model = models[i];
    e.reason = flag_reason[i];
    for (std::size_t gi = 0; gi < m; ++gi) {
      bool linked = false;
      for (const std::size_t u : comps[gi])
        if (g.eq[i][u] || g.dom[i][u] || g.dom[u][i]) linked = true;
      if (linked) e.group_indices.push_back(new_index[gi]);
    }
    std::sort(e.group_indices.begin(), e.group_indices.end());
    out.intersections.push_back(std::move(e));
  }
  return out;
}

inline nlohmann::ordered_json ranking_to_json(const Ranking& r) {
  nlohmann::ordered_json j;
  j["metric"] = r.metric;
  j["horizon"] = r.horizon;
  j["tier_count"] = r.tier_count;
  auto& groups = j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : r.groups) {
    nlohmann::ordered_json jg;
    jg["tier"] = g.tier;
    jg["models"] = g.models;
    groups.push_back(std::move(jg));
  }
  auto& inter = j["intersections"] = nlohmann::ordered_json::array();
  for (const auto& e : r.intersections) {
    nlohmann::ordered_json je;
    je["model"] = e.model;
    je["reason"] = e.reason;
    je["groups"] = e.group_indices;
    inter.push_back(std::move(je));
  }
  return j;
}

inline Ranking ranking_from_json(const nlohmann::json& j) {
  Ranking r;
  r.metric = j.at("metric").get<std::string>();
  r.horizon = j.at("horizon").get<int>();
  r.tier_count = j.at("tier_count").get<int>();
  for (const auto& jg : j.at("groups")) {
    RankingGroup g;
    g.tier = jg.at("tier").get<int>();
    g.models = jg.at("models").get<std::vector<std::string>>();
    r.groups.push_back(std::move(g));
  }
  for (const auto& je : j.at("intersections")) {
    IntersectionEntry e;
    e.model = je.at("model").get<std::string>();
    e.reason = je.at("reason").get<std::string>();
    e.group_indices = je.at("groups").get<std::vector<int>>();
    r.intersections.push_back(std::move(e));
  }
  return r;
}

}  // namespace lobbench
