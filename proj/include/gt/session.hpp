#pragma once
// Live testing campaigns: the adaptive loop driven by an operator who reports
// real lab results. No ground truth exists here; every update uses the
// campaign's assumed test parameters.
//
// Each session is persisted as an append-only JSON-lines file
// (<state_dir>/<id>.jsonl): a "create" line followed by one "result" line per
// posted outcome. Replaying the file reconstructs the session.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gt/core_model.hpp"
#include "gt/design.hpp"

namespace gt {

using nlohmann::json;

struct SessionConfig {
    int n = 0;
    std::vector<double> prior_q;
    double s = 0.0;
    double sigma = 0.0;
    double delta = 0.0;
    int max_tests = 1;
    SelectionStrategy strategy = SelectionStrategy::exhaustive;
};

// A 4xx-class failure with the HTTP status it maps to and the offending field.
class ApiError : public Error {
public:
    ApiError(int status, std::string field, const std::string& msg)
        : Error(msg), status_(status), field_(std::move(field)) {}
    int status() const noexcept { return status_; }
    const std::string& field() const noexcept { return field_; }

private:
    int status_;
    std::string field_;
};

namespace detail {

[[noreturn]] inline void bad_request(const std::string& field, const std::string& msg) {
    throw ApiError(400, field, msg);
}

inline double require_number(const json& body, const std::string& key, const std::string& path) {
    if (!body.contains(key)) bad_request(path, "missing field");
    if (!body[key].is_number()) bad_request(path, "expected a number");
    return body[key].get<double>();
}

inline int require_int(const json& body, const std::string& key, const std::string& path) {
    if (!body.contains(key)) bad_request(path, "missing field");
    if (!body[key].is_number_integer()) bad_request(path, "expected an integer");
    return body[key].get<int>();
}

}  // namespace detail

inline SessionConfig parse_session_config(const json& body) {
    using detail::bad_request;
    if (!body.is_object()) bad_request("", "body must be a JSON object");
    SessionConfig c;
    c.n = detail::require_int(body, "n", "n");
    if (c.n < 1 || c.n > kMaxPopulation)
        bad_request("n", "population must lie in [1, " + std::to_string(kMaxPopulation) + "]");

    if (!body.contains("prior")) bad_request("prior", "missing field");
    const auto& prior = body["prior"];
    if (prior.is_number()) {
        c.prior_q.assign(static_cast<std::size_t>(c.n), prior.get<double>());
    } else if (prior.is_array()) {
        if (static_cast<int>(prior.size()) != c.n) bad_request("prior", "needs exactly n entries");
        for (std::size_t i = 0; i < prior.size(); ++i) {
            if (!prior[i].is_number()) bad_request("prior[" + std::to_string(i) + "]", "expected a number");
            c.prior_q.push_back(prior[i].get<double>());
        }
    } else {
        bad_request("prior", "expected a probability or a list of n probabilities");
    }
    for (std::size_t i = 0; i < c.prior_q.size(); ++i)
        if (!(c.prior_q[i] > 0.0 && c.prior_q[i] < 1.0))
            bad_request(prior.is_array() ? "prior[" + std::to_string(i) + "]" : "prior",
                        "must lie in (0,1)");

    if (!body.contains("assumed_params") || !body["assumed_params"].is_object())
        bad_request("assumed_params", "expected an object with s and sigma");
    const auto& p = body["assumed_params"];
    c.s = detail::require_number(p, "s", "assumed_params.s");
    c.sigma = detail::require_number(p, "sigma", "assumed_params.sigma");
    try {
        (void)TestParams(c.s, c.sigma);
    } catch (const Error& e) {
        bad_request("assumed_params", e.what());
    }

    c.delta = detail::require_number(body, "delta", "delta");
    if (!(c.delta >= 0.0 && c.delta <= 1.0)) bad_request("delta", "must lie in [0,1]");
    c.max_tests = detail::require_int(body, "max_tests", "max_tests");
    if (c.max_tests < 1) bad_request("max_tests", "must be positive");
    if (body.contains("strategy")) {
        if (!body["strategy"].is_string()) bad_request("strategy", "expected a string");
        const auto s = body["strategy"].get<std::string>();
        if (s == "exhaustive")
            c.strategy = SelectionStrategy::exhaustive;
        else if (s == "greedy")
            c.strategy = SelectionStrategy::greedy;
        else
            bad_request("strategy", "expected \"exhaustive\" or \"greedy\"");
    }
    return c;
}

inline json session_config_json(const SessionConfig& c) {
    return {{"n", c.n},
            {"prior", c.prior_q},
            {"assumed_params", {{"s", c.s}, {"sigma", c.sigma}}},
            {"delta", c.delta},
            {"max_tests", c.max_tests},
            {"strategy", std::string(to_string(c.strategy))}};
}

struct HistoryEntry {
    Group group;
    int outcome = 0;
    bool override_recommendation = false;
};

class Session {
public:
    Session(std::string id, SessionConfig cfg)
        : id_(std::move(id)),
          cfg_(std::move(cfg)),
          params_(cfg_.s, cfg_.sigma),
          prior_(cfg_.prior_q),
          posterior_(Posterior::from_prior(prior_)),
          prior_entropy_(prior_entropy(prior_)) {}

    const std::string& id() const noexcept { return id_; }
    const SessionConfig& config() const noexcept { return cfg_; }

    Selection recommendation() {
        std::lock_guard lock(mutex_);
        return recommendation_locked();
    }

    struct ResultAck {
        double entropy_bits;
        double delta_threshold_bits;
        bool stopped;
    };

    // `on_applied` runs under the session lock, so persisted order matches
    // application order.
    template <class OnApplied>
    ResultAck post_result(Group group, int outcome, bool override_recommendation,
                          OnApplied&& on_applied) {
        std::lock_guard lock(mutex_);
        if (stopped_locked()) throw ApiError(409, "", "session is stopped");
        if (group.size() != cfg_.n) detail::bad_request("group", "indices outside population");
        if (group.empty()) detail::bad_request("group", "pool must not be empty");
        if (!override_recommendation && !(group == recommendation_locked().group))
            detail::bad_request("group", "does not match the current recommendation; set \"override\": true");
        apply_locked(group, outcome, override_recommendation);
        on_applied();
        return {posterior_entropy(posterior_), threshold(), stopped_locked()};
    }

    // Replays a persisted result without recommendation checks.
    void replay(Group group, int outcome, bool override_recommendation) {
        std::lock_guard lock(mutex_);
        apply_locked(group, outcome, override_recommendation);
    }

    json state() const {
        std::lock_guard lock(mutex_);
        json history = json::array();
        for (const auto& h : history_)
            history.push_back({{"group", h.group.indices()},
                               {"outcome", h.outcome},
                               {"override", h.override_recommendation}});
        return {{"marginals", marginals(posterior_)},
                {"entropy_bits", posterior_entropy(posterior_)},
                {"prior_entropy_bits", prior_entropy_},
                {"delta_threshold_bits", threshold()},
                {"history", std::move(history)},
                {"status", stopped_locked() ? "stopped" : "active"}};
    }

    Posterior posterior() const {
        std::lock_guard lock(mutex_);
        return posterior_;
    }

    TestParams params() const noexcept { return params_; }

private:
    double threshold() const { return cfg_.delta * prior_entropy_; }

    bool stopped_locked() const {
        if (static_cast<int>(history_.size()) >= cfg_.max_tests) return true;
        return stopping_met(posterior_entropy(posterior_),
                            StoppingConfig{cfg_.delta, prior_entropy_, cfg_.max_tests});
    }

    Selection recommendation_locked() {
        if (!cached_) cached_ = select_group(posterior_, params_, cfg_.strategy);
        return *cached_;
    }

    void apply_locked(Group group, int outcome, bool override_recommendation) {
        posterior_ = posterior_update(posterior_, TestRecord(group, outcome, params_));
        history_.push_back({group, outcome, override_recommendation});
        cached_.reset();
    }

    std::string id_;
    SessionConfig cfg_;
    TestParams params_;
    Prior prior_;
    Posterior posterior_;
    double prior_entropy_;
    std::vector<HistoryEntry> history_;
    std::optional<Selection> cached_;
    mutable std::mutex mutex_;
};

struct ApiResponse {
    int status = 200;
    json body;
};

// Request handling independent of the HTTP transport.
class SessionService {
public:
    explicit SessionService(std::optional<std::filesystem::path> state_dir = {})
        : state_dir_(std::move(state_dir)), rng_(std::random_device{}()) {
        if (state_dir_) {
            std::filesystem::create_directories(*state_dir_);
            load_all();
        }
    }

    ApiResponse create(const std::string& body) {
        return guarded([&] {
            const auto cfg = parse_session_config(parse_body(body));
            auto session = std::make_shared<Session>(new_id(), cfg);
            persist(session->id(), {{"type", "create"}, {"session_id", session->id()},
                                    {"config", session_config_json(cfg)}},
                    true);
            std::unique_lock lock(mutex_);
            sessions_[session->id()] = session;
            return ApiResponse{201, {{"session_id", session->id()}}};
        });
    }

    ApiResponse recommendation(const std::string& id) {
        return guarded([&] {
            auto session = get(id);
            const auto pick = session->recommendation();
            return ApiResponse{200,
                               {{"group", pick.group.indices()},
                                {"f", pick.f},
                                {"utility_bits", pick.utility},
                                {"predicted_positive_prob", predictive_positive(pick.f, session->params())}}};
        });
    }

    ApiResponse post_result(const std::string& id, const std::string& body) {
        return guarded([&] {
            auto session = get(id);
            const json j = parse_body(body);
            if (!j.is_object()) detail::bad_request("", "body must be a JSON object");
            if (!j.contains("group") || !j["group"].is_array()) detail::bad_request("group", "expected a list of indices");
            std::vector<int> idx;
            for (std::size_t i = 0; i < j["group"].size(); ++i) {
                const auto& e = j["group"][i];
                if (!e.is_number_integer()) detail::bad_request("group[" + std::to_string(i) + "]", "expected an integer");
                const int v = e.get<int>();
                if (v < 0 || v >= session->config().n)
                    detail::bad_request("group[" + std::to_string(i) + "]", "index outside population");
                idx.push_back(v);
            }
            if (!j.contains("outcome") || !j["outcome"].is_number_integer())
                detail::bad_request("outcome", "expected 0 or 1");
            const int y = j["outcome"].get<int>();
            if (y != 0 && y != 1) detail::bad_request("outcome", "expected 0 or 1");
            bool override_rec = false;
            if (j.contains("override")) {
                if (!j["override"].is_boolean()) detail::bad_request("override", "expected true or false");
                override_rec = j["override"].get<bool>();
            }
            const Group g = Group::from_indices(idx, session->config().n);
            const auto ack = session->post_result(g, y, override_rec, [&] {
                persist(id, {{"type", "result"}, {"group", g.indices()}, {"outcome", y}, {"override", override_rec}},
                        false);
            });
            return ApiResponse{200,
                               {{"entropy_bits", ack.entropy_bits},
                                {"delta_threshold_bits", ack.delta_threshold_bits},
                                {"stopped", ack.stopped}}};
        });
    }

    ApiResponse state(const std::string& id) {
        return guarded([&] { return ApiResponse{200, get(id)->state()}; });
    }

    ApiResponse remove(const std::string& id) {
        return guarded([&] {
            std::unique_lock lock(mutex_);
            if (sessions_.erase(id) == 0) throw ApiError(404, "", "unknown session " + id);
            if (state_dir_) std::filesystem::remove(file_for(id));
            return ApiResponse{204, nullptr};
        });
    }

    std::shared_ptr<Session> find(const std::string& id) const {
        std::shared_lock lock(mutex_);
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return sessions_.size();
    }

private:
    template <class F>
    static ApiResponse guarded(F&& f) {
        try {
            return f();
        } catch (const ApiError& e) {
            json body = {{"error", e.what()}};
            if (!e.field().empty()) body["field"] = e.field();
            return {e.status(), std::move(body)};
        } catch (const Error& e) {
            return {400, {{"error", e.what()}}};
        }
    }

    static json parse_body(const std::string& body) {
        try {
            return json::parse(body);
        } catch (const json::parse_error& e) {
            detail::bad_request("", std::string("malformed JSON: ") + e.what());
        }
    }

    std::shared_ptr<Session> get(const std::string& id) const {
        auto s = find(id);
        if (!s) throw ApiError(404, "", "unknown session " + id);
        return s;
    }

    std::string new_id() {
        std::lock_guard lock(id_mutex_);
        static constexpr char hex[] = "0123456789abcdef";
        for (;;) {
            std::string id;
            for (int i = 0; i < 16; ++i) id += hex[rng_() & 15u];
            if (!find(id)) return id;
        }
    }

    std::filesystem::path file_for(const std::string& id) const { return *state_dir_ / (id + ".jsonl"); }

    void persist(const std::string& id, const json& line, bool truncate) {
        if (!state_dir_) return;
        std::ofstream out(file_for(id), truncate ? std::ios::trunc : std::ios::app);
        out << line.dump() << '\n';
        if (!out) throw Error("failed to write session file for " + id);
    }

    void load_all() {
        for (const auto& entry : std::filesystem::directory_iterator(*state_dir_)) {
            if (entry.path().extension() != ".jsonl") continue;
            std::ifstream in(entry.path());
            std::shared_ptr<Session> session;
            for (std::string line; std::getline(in, line);) {
                if (line.empty()) continue;
                const auto j = json::parse(line);
                if (j.at("type") == "create") {
                    session = std::make_shared<Session>(j.at("session_id").get<std::string>(),
                                                        parse_session_config(j.at("config")));
                } else if (session && j.at("type") == "result") {
                    const auto idx = j.at("group").get<std::vector<int>>();
                    session->replay(Group::from_indices(idx, session->config().n),
                                    j.at("outcome").get<int>(), j.at("override").get<bool>());
                }
            }
            if (session) sessions_[session->id()] = session;
        }
    }

    std::optional<std::filesystem::path> state_dir_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    mutable std::shared_mutex mutex_;
    std::mutex id_mutex_;
    std::mt19937_64 rng_;
};

}  // namespace gt
