#include "trajattr/trajstore.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "trajattr/errors.hpp"

namespace trajattr {

using nlohmann::json;

std::vector<StateId> Trajectory::visited() const {
    std::vector<StateId> out;
    out.reserve(steps.size() + 1);
    for (const Transition& t : steps) out.push_back(t.s);
    if (!steps.empty()) out.push_back(steps.back().s_next);
    return out;
}

namespace {

int reward_symbol(double r) {
    if (r == -1.0) return 0;
    if (r == 0.0) return 1;
    if (r == 1.0) return 2;
    throw ValidationError("reward outside {-1,0,1}: " + std::to_string(r));
}

double reward_from_symbol(int sym) {
    switch (sym) {
        case 0: return -1.0;
        case 1: return 0.0;
        case 2: return 1.0;
    }
    throw ValidationError("reward token out of range");
}

}  // namespace

TokenSequence tokenize(const Trajectory& traj, const Environment& env) {
    if (traj.steps.empty()) throw ValidationError("cannot tokenize an empty trajectory");
    const int S = env.n_states();
    TokenSequence seq;
    seq.vocab = vocab_size(env);
    seq.tokens.reserve(traj.steps.size() * 3);
    for (const Transition& t : traj.steps) {
        if (t.s < 0 || t.s >= S)
            throw ValidationError("state id outside vocabulary: " + std::to_string(t.s));
        seq.tokens.push_back(t.s);
        seq.tokens.push_back(S + action_code(t.a));
        seq.tokens.push_back(S + 4 + reward_symbol(t.r));
    }
    return seq;
}

Trajectory detokenize(const TokenSequence& seq, const Environment& env) {
    if (seq.tokens.empty() || seq.tokens.size() % 3 != 0)
        throw ValidationError("token stream length must be a positive multiple of 3");
    const int S = env.n_states();
    if (seq.vocab != vocab_size(env)) throw ValidationError("token vocabulary mismatch");
    Trajectory traj;
    const std::size_t n = seq.tokens.size() / 3;
    traj.steps.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int obs = seq.tokens[3 * i];
        const int act = seq.tokens[3 * i + 1];
        const int rew = seq.tokens[3 * i + 2];
        if (obs < 0 || obs >= S) throw ValidationError("observation token out of range");
        if (act < S || act >= S + 4) throw ValidationError("action token out of range");
        if (rew < S + 4 || rew >= S + 7) throw ValidationError("reward token out of range");
        traj.steps[i].s = obs;
        traj.steps[i].a = action_from_code(act - S);
        traj.steps[i].r = reward_from_symbol(rew - S - 4);
    }
    // next states are implied by the chain; the marker points at itself
    for (std::size_t i = 0; i + 1 < n; ++i) traj.steps[i].s_next = traj.steps[i + 1].s;
    traj.steps[n - 1].s_next = traj.steps[n - 1].s;
    return traj;
}

void validate_dataset(const TrajectoryDataset& ds, const Environment& env) {
    if (ds.trajectories.empty()) throw ValidationError("dataset has no trajectories");
    const int S = env.n_states();
    for (std::size_t ti = 0; ti < ds.trajectories.size(); ++ti) {
        const Trajectory& traj = ds.trajectories[ti];
        const std::string where = "trajectory " + std::to_string(ti);
        if (traj.steps.empty()) throw ValidationError(where + " is empty");
        for (const Transition& t : traj.steps) {
            if (t.s < 0 || t.s >= S || t.s_next < 0 || t.s_next >= S)
                throw ValidationError(where + " has out-of-range states");
        }
        for (std::size_t i = 0; i + 1 < traj.steps.size(); ++i) {
            const Transition& t = traj.steps[i];
            const StepOutcome out = env.step(t.s, t.a);
            if (out.next_state != t.s_next || out.reward != t.r)
                throw ValidationError(where + " step " + std::to_string(i) +
                                      " contradicts the grid dynamics");
        }
        const Transition& marker = traj.steps.back();
        if (marker.s_next != marker.s || marker.r != 0.0)
            throw ValidationError(where + " does not end with a (s, a, 0, s) marker");
    }
}

void save_dataset(const TrajectoryDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    json header;
    header["env"] = ds.env_name;
    header["n"] = ds.trajectories.size();
    header["config_hash"] = ds.config_hash;
    out << header.dump() << "\n";
    for (const Trajectory& traj : ds.trajectories) {
        json arr = json::array();
        for (const Transition& t : traj.steps)
            arr.push_back({t.s, action_code(t.a), static_cast<int>(t.r), t.s_next});
        out << arr.dump() << "\n";
    }
    if (!out) throw StageError("gen-data", "short write to " + path);
}

namespace {

TrajectoryDataset load_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open dataset: " + path);
    std::string line;
    std::size_t lineno = 0;
    TrajectoryDataset ds;
    std::size_t declared = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
        if (lineno == 1) {
            if (!j.is_object() || !j.contains("env") || !j.contains("n") ||
                !j.contains("config_hash"))
                throw ValidationError("dataset line 1: malformed header");
            ds.env_name = j["env"].get<std::string>();
            declared = j["n"].get<std::size_t>();
            ds.config_hash = j["config_hash"].get<std::string>();
            continue;
        }
        if (!j.is_array())
            throw ValidationError("dataset line " + std::to_string(lineno) +
                                  ": expected a trajectory array");
        Trajectory traj;
        for (const auto& row : j) {
            if (!row.is_array() || row.size() != 4)
                throw ValidationError("dataset line " + std::to_string(lineno) +
                                      ": transition must be [s,a,r,s_next]");
            Transition t;
            t.s = row[0].get<int>();
            t.a = action_from_code(row[1].get<int>());
            t.r = row[2].get<double>();
            t.s_next = row[3].get<int>();
            traj.steps.push_back(t);
        }
        ds.trajectories.push_back(std::move(traj));
    }
    if (lineno == 0) throw ValidationError("dataset file is empty: " + path);
    if (ds.trajectories.size() != declared)
        throw ValidationError("dataset header declares " + std::to_string(declared) +
                              " trajectories, file has " +
                              std::to_string(ds.trajectories.size()));
    return ds;
}

}  // namespace

TrajectoryDataset load_dataset(const std::string& path) {
    TrajectoryDataset ds = load_lines(path);
    const Environment env(GridSpec::builtin(ds.env_name));
    validate_dataset(ds, env);
    return ds;
}

TrajectoryDataset load_dataset(const std::string& path, const Environment& env,
                               const std::string& expected_name) {
    TrajectoryDataset ds = load_lines(path);
    if (ds.env_name != expected_name)
        throw ValidationError("dataset env \"" + ds.env_name + "\" does not match expected \"" +
                              expected_name + "\"");
    validate_dataset(ds, env);
    return ds;
}

}  // namespace trajattr
