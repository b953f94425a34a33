#pragma once

// Update-semantics kernel: the pact sets Gamma (must), Xi (might) and Omega
// (must-not) over referents and stimulus objects, binding derivation from
// similarity evidence, and guess resolution.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "entrain/error.hpp"

namespace entrain {

using ObjectId = std::string;
using ReferentId = std::string;
using Scores = std::map<ObjectId, double>;

struct Referent {
    ReferentId id;
    std::vector<std::size_t> source_utterances;
};

enum class Modality { Must, Might, MustNot };

constexpr std::string_view to_string(Modality m) noexcept {
    switch (m) {
        case Modality::Must: return "must";
        case Modality::Might: return "might";
        case Modality::MustNot: return "must_not";
    }
    return "?";
}

struct Binding {
    ReferentId referent;
    ObjectId object;
    Modality modality = Modality::Must;

    friend bool operator==(const Binding&, const Binding&) = default;
};

class CommonGroundContext {
public:
    CommonGroundContext() = default;
    explicit CommonGroundContext(std::set<ObjectId> objects) : objects_(std::move(objects)) {}

    const std::set<ObjectId>& objects() const noexcept { return objects_; }

    std::optional<ObjectId> bound_object(const ReferentId& r) const {
        if (auto it = gamma_.find(r); it != gamma_.end()) return it->second;
        return std::nullopt;
    }
    std::optional<ReferentId> bound_referent(const ObjectId& o) const {
        if (auto it = gamma_inverse_.find(o); it != gamma_inverse_.end()) return it->second;
        return std::nullopt;
    }
    const std::set<ObjectId>& hypotheses(const ReferentId& r) const { return lookup(xi_, r); }
    const std::set<ObjectId>& negatives(const ReferentId& r) const { return lookup(omega_, r); }
    bool is_negated(const ReferentId& r, const ObjectId& o) const { return negatives(r).contains(o); }

    /// A referent whose negatives cover every object can never be bound.
    bool is_dead(const ReferentId& r) const { return !objects_.empty() && negatives(r).size() == objects_.size(); }

    std::size_t gamma_size() const noexcept { return gamma_.size(); }
    std::size_t xi_size() const noexcept {
        std::size_t n = 0;
        for (const auto& [r, os] : xi_) n += os.size();
        return n;
    }
    std::size_t omega_size() const noexcept {
        std::size_t n = 0;
        for (const auto& [r, os] : omega_) n += os.size();
        return n;
    }

    std::vector<Binding> gamma() const {
        std::vector<Binding> out;
        for (const auto& [r, o] : gamma_) out.push_back({r, o, Modality::Must});
        return out;
    }
    std::vector<Binding> xi() const { return flatten(xi_, Modality::Might); }
    std::vector<Binding> omega() const { return flatten(omega_, Modality::MustNot); }

    /// Every referent mentioned in any pact set, ascending.
    std::set<ReferentId> referents() const {
        std::set<ReferentId> out;
        for (const auto& [r, o] : gamma_) out.insert(r);
        for (const auto& [r, os] : xi_) out.insert(r);
        for (const auto& [r, os] : omega_) out.insert(r);
        return out;
    }

    /// Human-readable description of the first violated invariant, if any.
    std::optional<std::string> violation() const {
        for (const auto& [r, o] : gamma_) {
            if (!objects_.contains(o)) return "gamma binds unknown object " + o;
            if (is_negated(r, o)) return "gamma and omega both hold (" + r + ", " + o + ")";
            if (hypotheses(r).contains(o)) return "gamma and xi both hold (" + r + ", " + o + ")";
            auto inv = gamma_inverse_.find(o);
            if (inv == gamma_inverse_.end() || inv->second != r) return "gamma is not injective on object " + o;
        }
        if (gamma_inverse_.size() != gamma_.size()) return "gamma is not injective";
        for (const auto& [r, os] : xi_) {
            if (os.empty()) return "empty xi entry for " + r;
            for (const auto& o : os)
                if (!objects_.contains(o)) return "xi mentions unknown object " + o;
        }
        for (const auto& [r, os] : omega_) {
            if (os.empty()) return "empty omega entry for " + r;
            for (const auto& o : os)
                if (!objects_.contains(o)) return "omega mentions unknown object " + o;
        }
        return std::nullopt;
    }

    void bind(const ReferentId& r, const ObjectId& o) {
        gamma_[r] = o;
        gamma_inverse_[o] = r;
    }
    void set_hypotheses(const ReferentId& r, std::set<ObjectId> os) {
        if (os.empty()) {
            xi_.erase(r);
        } else {
            xi_[r] = std::move(os);
        }
    }
    void drop_hypotheses_for_object(const ObjectId& o) {
        for (auto it = xi_.begin(); it != xi_.end();) {
            it->second.erase(o);
            it = it->second.empty() ? xi_.erase(it) : std::next(it);
        }
    }
    void negate(const ReferentId& r, const ObjectId& o) { omega_[r].insert(o); }

    friend bool operator==(const CommonGroundContext&, const CommonGroundContext&) = default;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["objects"] = objects_;
        auto pairs = [](const std::vector<Binding>& bs) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& b : bs) arr.push_back({{"referent", b.referent}, {"object", b.object}});
            return arr;
        };
        j["gamma"] = pairs(gamma());
        j["xi"] = pairs(xi());
        nlohmann::json partial = nlohmann::json::array();
        nlohmann::json dead = nlohmann::json::array();
        for (const auto& [r, os] : omega_) {
            if (is_dead(r)) {
                dead.push_back(r);
            } else {
                for (const auto& o : os) partial.push_back({{"referent", r}, {"object", o}});
            }
        }
        j["omega"] = partial;
        j["omega_referents"] = dead;
        return j;
    }

    static CommonGroundContext from_json(const nlohmann::json& j) {
        CommonGroundContext ctx(j.at("objects").get<std::set<ObjectId>>());
        for (const auto& b : j.at("gamma")) ctx.bind(b.at("referent"), b.at("object"));
        for (const auto& b : j.at("xi")) ctx.xi_[b.at("referent")].insert(b.at("object").get<ObjectId>());
        for (const auto& b : j.value("omega", nlohmann::json::array())) ctx.negate(b.at("referent"), b.at("object"));
        for (const auto& r : j.at("omega_referents")) {
            for (const auto& o : ctx.objects_) ctx.negate(r.get<ReferentId>(), o);
        }
        if (auto v = ctx.violation()) throw Error(Errc::InvalidArgument, "context JSON violates invariants: " + *v);
        return ctx;
    }

private:
    static const std::set<ObjectId>& lookup(const std::map<ReferentId, std::set<ObjectId>>& m, const ReferentId& r) {
        static const std::set<ObjectId> empty;
        auto it = m.find(r);
        return it == m.end() ? empty : it->second;
    }
    static std::vector<Binding> flatten(const std::map<ReferentId, std::set<ObjectId>>& m, Modality mod) {
        std::vector<Binding> out;
        for (const auto& [r, os] : m)
            for (const auto& o : os) out.push_back({r, o, mod});
        return out;
    }

    std::set<ObjectId> objects_;
    std::map<ReferentId, ObjectId> gamma_;
    std::map<ObjectId, ReferentId> gamma_inverse_;
    std::map<ReferentId, std::set<ObjectId>> xi_;
    std::map<ReferentId, std::set<ObjectId>> omega_;
};

/// B = {o : g(o) > epsilon}, skipping objects already bound in `ctx`.
inline std::set<ObjectId> derive_bindings(const Scores& scores, double epsilon,
                                          const CommonGroundContext* ctx = nullptr) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw Error(Errc::InvalidArgument, "epsilon must lie in [0, 1)");
    std::set<ObjectId> out;
    for (const auto& [o, g] : scores) {
        if (ctx != nullptr && ctx->bound_referent(o)) continue;
        if (g > epsilon) out.insert(o);
    }
    return out;
}

struct Hypothesis {
    ObjectId object;
    double probability = 0.0;
};

struct HypothesisDistribution {
    std::vector<Hypothesis> entries;  // descending probability, ties by ascending id
    double temperature = 1.0;
    double retained_mass = 1.0;  // share of the full softmax mass kept before renormalizing

    bool contains(const ObjectId& o) const {
        return std::any_of(entries.begin(), entries.end(), [&](const Hypothesis& h) { return h.object == o; });
    }
    std::optional<ObjectId> top() const {
        if (entries.empty()) return std::nullopt;
        return entries.front().object;
    }
};

/// Softmax over g/T restricted to the k most probable objects and renormalized
/// over them, so the retained entries always sum to 1.
inline HypothesisDistribution softmax_hypotheses(const Scores& scores, double temperature, std::size_t k) {
    if (!(temperature > 0.0)) throw Error(Errc::InvalidArgument, "temperature must be positive");
    if (scores.empty()) throw Error(Errc::InvalidArgument, "no scores");
    if (k < 1 || k > scores.size()) throw Error(Errc::InvalidArgument, "k must lie in [1, |objects|]");
    double peak = -std::numeric_limits<double>::infinity();
    for (const auto& [o, g] : scores) peak = std::max(peak, g);
    std::vector<Hypothesis> all;
    double total = 0.0;
    for (const auto& [o, g] : scores) {
        const double e = std::exp((g - peak) / temperature);
        all.push_back({o, e});
        total += e;
    }
    // std::map iteration is ascending by id, so a stable sort keeps id order on ties.
    std::stable_sort(all.begin(), all.end(),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.probability > b.probability; });
    all.resize(k);
    double kept = 0.0;
    for (const auto& h : all) kept += h.probability;
    for (auto& h : all) h.probability /= kept;
    return {std::move(all), temperature, kept / total};
}

namespace detail {

[[noreturn]] inline void contradiction(const ReferentId& r, const ObjectId& o, const std::string& why) {
    throw Error(Errc::Contradiction, "(" + r + " <- " + o + "): " + why);
}

inline void promote(CommonGroundContext& ctx, const ReferentId& r, const ObjectId& o) {
    if (!ctx.objects().contains(o)) throw Error(Errc::InvalidArgument, "unknown object " + o);
    if (ctx.is_negated(r, o)) contradiction(r, o, "already must-not for this referent");
    if (auto bound = ctx.bound_object(r); bound && *bound != o) contradiction(r, o, "referent bound to " + *bound);
    if (auto owner = ctx.bound_referent(o); owner && *owner != r) contradiction(r, o, "object bound to " + *owner);
    ctx.bind(r, o);
    ctx.set_hypotheses(r, {});
    ctx.drop_hypotheses_for_object(o);
    for (const auto& other : ctx.objects()) {
        if (other != o) ctx.negate(r, other);
    }
}

inline void reject_all(CommonGroundContext& ctx, const ReferentId& r) {
    if (auto bound = ctx.bound_object(r)) contradiction(r, *bound, "bound referent cannot be negated");
    ctx.set_hypotheses(r, {});
    for (const auto& o : ctx.objects()) ctx.negate(r, o);
}

}  // namespace detail

/// One context update for referent `r` given binding set `b`; returns the new
/// context and leaves `ctx` untouched on error.
///
/// |B| = 1 binds and negates the rest, |B| = 0 negates every object, |B| > 1
/// intersects with earlier hypotheses for `r`. Candidates already negated for
/// `r` or bound to another referent are dropped from a multi-object B first.
inline CommonGroundContext apply_update(const CommonGroundContext& ctx, const ReferentId& r,
                                        const std::set<ObjectId>& b) {
    if (r.empty()) throw Error(Errc::InvalidArgument, "empty referent id");
    CommonGroundContext next = ctx;
    if (b.size() == 1) {
        detail::promote(next, r, *b.begin());
        return next;
    }
    if (b.empty()) {
        detail::reject_all(next, r);
        return next;
    }
    std::set<ObjectId> candidates;
    for (const auto& o : b) {
        if (!ctx.objects().contains(o)) throw Error(Errc::InvalidArgument, "unknown object " + o);
        const auto owner = ctx.bound_referent(o);
        if (ctx.is_negated(r, o) || (owner && *owner != r)) continue;
        candidates.insert(o);
    }
    if (const auto& old = ctx.hypotheses(r); !old.empty()) {
        std::set<ObjectId> both;
        std::set_intersection(old.begin(), old.end(), candidates.begin(), candidates.end(),
                              std::inserter(both, both.begin()));
        candidates = std::move(both);
    }
    if (auto bound = ctx.bound_object(r)) {
        // Already bound: more evidence can only confirm the pact.
        if (!candidates.contains(*bound)) detail::contradiction(r, *bound, "new evidence excludes the bound object");
        return next;
    }
    if (candidates.size() == 1) {
        detail::promote(next, r, *candidates.begin());
    } else if (candidates.empty()) {
        detail::reject_all(next, r);
    } else {
        next.set_hypotheses(r, std::move(candidates));
    }
    return next;
}

/// Every object has exactly one must-pact and no might-pact is left open.
inline bool is_entrained(const CommonGroundContext& ctx) {
    if (ctx.objects().empty() || ctx.xi_size() != 0) return false;
    return std::all_of(ctx.objects().begin(), ctx.objects().end(),
                       [&](const ObjectId& o) { return ctx.bound_referent(o).has_value(); });
}

enum class GuessSource { Gamma, Xi, Scores, Wait };

constexpr std::string_view to_string(GuessSource s) noexcept {
    switch (s) {
        case GuessSource::Gamma: return "gamma";
        case GuessSource::Xi: return "xi";
        case GuessSource::Scores: return "scores";
        case GuessSource::Wait: return "wait";
    }
    return "?";
}

struct GuessOutcome {
    std::optional<ObjectId> object;  // nullopt means wait for another utterance
    GuessSource source = GuessSource::Wait;

    bool waiting() const noexcept { return !object.has_value(); }
};

/// Gamma pact, else a lone Xi hypothesis, else the best-scoring admissible
/// object, else wait. Admissible objects are unbound, not negated for `r`, and
/// inside Xi(r) when that holds several hypotheses. Ties go to the smaller id.
inline GuessOutcome resolve_guess(const CommonGroundContext& ctx, const ReferentId& r,
                                  const std::optional<Scores>& scores = std::nullopt) {
    if (auto o = ctx.bound_object(r)) return {*o, GuessSource::Gamma};
    const auto& xi = ctx.hypotheses(r);
    if (xi.size() == 1) return {*xi.begin(), GuessSource::Xi};
    if (!scores) return {};
    std::optional<ObjectId> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& [o, g] : *scores) {
        if (ctx.bound_referent(o) || ctx.is_negated(r, o)) continue;
        if (!xi.empty() && !xi.contains(o)) continue;
        if (!best || g > best_score) {
            best = o;
            best_score = g;
        }
    }
    if (!best) return {};
    return {best, GuessSource::Scores};
}

enum class ContradictionPolicy { Strict, ForgiveAndRebind };

struct UpdateOutcome {
    CommonGroundContext context;
    ReferentId referent;  // differs from the requested one after a rebind
    bool contradiction = false;
    std::string message;
};

/// Fresh id of the form "<r>#<n>" not yet mentioned anywhere in `ctx`.
inline ReferentId fresh_referent(const CommonGroundContext& ctx, const ReferentId& r) {
    const auto used = ctx.referents();
    for (int n = 2;; ++n) {
        ReferentId candidate = r + "#" + std::to_string(n);
        if (!used.contains(candidate)) return candidate;
    }
}

/// apply_update under a contradiction policy. Strict rethrows; forgive-and-rebind
/// retries once under a fresh referent id and otherwise keeps the context.
inline UpdateOutcome apply_update_with_policy(const CommonGroundContext& ctx, const ReferentId& r,
                                              const std::set<ObjectId>& b, ContradictionPolicy policy) {
    try {
        return {apply_update(ctx, r, b), r, false, {}};
    } catch (const Error& e) {
        if (e.code() != Errc::Contradiction || policy == ContradictionPolicy::Strict) throw;
        const ReferentId alt = fresh_referent(ctx, r);
        try {
            return {apply_update(ctx, alt, b), alt, true, e.what()};
        } catch (const Error& again) {
            if (again.code() != Errc::Contradiction) throw;
            return {ctx, r, true, again.what()};
        }
    }
}

}  // namespace entrain
