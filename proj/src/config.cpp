#include "trajattr/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trajattr/errors.hpp"
#include "trajattr/hash.hpp"

namespace trajattr {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void bad_line(int lineno, const std::string& why) {
    throw ValidationError("config line " + std::to_string(lineno) + ": " + why);
}

int to_int(const std::string& v, int lineno) {
    try {
        std::size_t used = 0;
        const int x = std::stoi(v, &used);
        if (used != v.size()) bad_line(lineno, "trailing junk in integer '" + v + "'");
        return x;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        bad_line(lineno, "not an integer: '" + v + "'");
    }
}

double to_double(const std::string& v, int lineno) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) bad_line(lineno, "trailing junk in number '" + v + "'");
        return x;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        bad_line(lineno, "not a number: '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& v, int lineno) {
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) bad_line(lineno, "trailing junk in seed '" + v + "'");
        return static_cast<std::uint64_t>(x);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        bad_line(lineno, "not a seed value: '" + v + "'");
    }
}

bool to_bool(const std::string& v, int lineno) {
    if (v == "true") return true;
    if (v == "false") return false;
    bad_line(lineno, "not a boolean (true/false): '" + v + "'");
}

void apply_train(TrainConfig& t, const std::string& key, const std::string& value,
                 int lineno) {
    if (key == "episodes") t.episodes = to_int(value, lineno);
    else if (key == "alpha") t.alpha = to_double(value, lineno);
    else if (key == "gamma") t.gamma = to_double(value, lineno);
    else if (key == "eval_epochs") t.eval_epochs = to_int(value, lineno);
    else if (key == "epsilon") t.epsilon = to_double(value, lineno);
    else if (key == "max_episode_len") t.max_episode_len = to_int(value, lineno);
    else if (key == "exploring_starts") t.exploring_starts = to_bool(value, lineno);
    else bad_line(lineno, "unknown key '" + key + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    bool seeds_set = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash_pos = line.find_first_of("#;");
        if (hash_pos != std::string::npos) line.resize(hash_pos);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') bad_line(lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "experiment" && section != "data" && section != "agent" &&
                section != "encoder" && section != "cluster" && section != "offline" &&
                section != "behavior")
                bad_line(lineno, "unknown section [" + section + "]");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) bad_line(lineno, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) bad_line(lineno, "empty key");
        if (section.empty()) bad_line(lineno, "key before any [section]");

        if (section == "experiment") {
            if (key == "env") cfg.env_name = value;
            else if (key == "out_dir") cfg.out_dir = value;
            else if (key == "data_seed") cfg.data_seed = to_u64(value, lineno);
            else if (key == "n_trajectories") cfg.n_trajectories = to_int(value, lineno);
            else if (key == "seeds") {
                cfg.seeds.clear();
                seeds_set = true;
                std::istringstream ss(value);
                std::string tok;
                while (ss >> tok) {
                    if (!tok.empty() && tok.back() == ',') tok.pop_back();
                    if (!tok.empty()) cfg.seeds.push_back(to_u64(tok, lineno));
                }
            } else bad_line(lineno, "unknown key '" + key + "'");
        } else if (section == "data") {
            if (key == "n_positive") cfg.gen.n_positive = to_int(value, lineno);
            else if (key == "n_negative") cfg.gen.n_negative = to_int(value, lineno);
            else if (key == "trajectories_per_agent")
                cfg.gen.trajectories_per_agent = to_int(value, lineno);
            else if (key == "start_mode") {
                try {
                    cfg.gen.start_mode = start_mode_from_string(value);
                } catch (const ValidationError& e) {
                    bad_line(lineno, e.what());
                }
            } else if (key == "fixed_start_fraction")
                cfg.gen.fixed_start_fraction = to_double(value, lineno);
            else if (key == "boost_states") {
                cfg.gen.boost_states.clear();
                std::istringstream ss(value);
                std::string tok;
                while (ss >> tok) {
                    if (!tok.empty() && tok.back() == ',') tok.pop_back();
                    if (!tok.empty()) cfg.gen.boost_states.push_back(to_int(tok, lineno));
                }
            } else if (key == "boost_fraction")
                cfg.gen.boost_fraction = to_double(value, lineno);
            else if (key == "rollout_epsilon") cfg.gen.rollout_epsilon = to_double(value, lineno);
            else if (key == "max_traj_len") cfg.gen.max_traj_len = to_int(value, lineno);
            else if (key == "negative_episodes")
                cfg.gen.negative_episodes = to_int(value, lineno);
            else if (key == "negative_epsilon")
                cfg.gen.negative_epsilon = to_double(value, lineno);
            else if (key == "negative_groups")
                cfg.gen.negative_groups = to_int(value, lineno);
            else if (key == "retry_budget") cfg.gen.retry_budget = to_int(value, lineno);
            else bad_line(lineno, "unknown key '" + key + "'");
        } else if (section == "agent") {
            apply_train(cfg.gen.agent, key, value, lineno);
        } else if (section == "offline") {
            apply_train(cfg.offline, key, value, lineno);
        } else if (section == "encoder") {
            if (key == "epochs") cfg.encoder.epochs = to_int(value, lineno);
            else if (key == "learning_rate") cfg.encoder.learning_rate = to_double(value, lineno);
            else if (key == "batch_size") cfg.encoder.batch_size = to_int(value, lineno);
            else if (key == "hidden") cfg.encoder.H = to_int(value, lineno);
            else if (key == "embed") cfg.encoder.E = to_int(value, lineno);
            else bad_line(lineno, "unknown key '" + key + "'");
        } else if (section == "cluster") {
            if (key == "algorithm") {
                if (value != "xmeans" && value != "dbscan")
                    bad_line(lineno, "algorithm must be xmeans or dbscan");
                cfg.cluster_algorithm = value;
            } else if (key == "k_min") cfg.xmeans.k_min = to_int(value, lineno);
            else if (key == "k_max") cfg.xmeans.k_max = to_int(value, lineno);
            else if (key == "center_seed") cfg.xmeans.center_seed = to_u64(value, lineno);
            else if (key == "algo_seed") cfg.xmeans.algo_seed = to_u64(value, lineno);
            else if (key == "max_iters") cfg.xmeans.max_iters = to_int(value, lineno);
            else if (key == "eps") cfg.dbscan.eps = to_double(value, lineno);
            else if (key == "min_pts") cfg.dbscan.min_pts = to_int(value, lineno);
            else bad_line(lineno, "unknown key '" + key + "'");
        } else if (section == "behavior") {
            if (key == "top_right_row_max") cfg.top_right_row_max = to_int(value, lineno);
            else if (key == "top_right_col_min") cfg.top_right_col_min = to_int(value, lineno);
            else if (key == "middle_row_lo") cfg.middle_row_lo = to_int(value, lineno);
            else if (key == "middle_row_hi") cfg.middle_row_hi = to_int(value, lineno);
            else if (key == "middle_col_lo") cfg.middle_col_lo = to_int(value, lineno);
            else if (key == "middle_col_hi") cfg.middle_col_hi = to_int(value, lineno);
            else bad_line(lineno, "unknown key '" + key + "'");
        }
    }
    if (seeds_set && cfg.seeds.empty())
        throw ValidationError("seeds list is empty");
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

void ExperimentConfig::validate() const {
    if (env_name.empty()) throw ValidationError("env name is empty");
    if (out_dir.empty()) throw ValidationError("out_dir is empty");
    if (seeds.empty()) throw ValidationError("need at least one seed");
    if (n_trajectories < 1) throw ValidationError("n_trajectories must be positive");
    gen.validate();
    encoder.validate();
    offline.validate();
    if (cluster_algorithm == "xmeans") xmeans.validate();
    else if (cluster_algorithm == "dbscan") dbscan.validate();
    else throw ValidationError("cluster algorithm must be xmeans or dbscan");
}

namespace {

void train_text(std::ostringstream& out, const char* section, const TrainConfig& t) {
    out << "[" << section << "]\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "episodes = %d\nalpha = %.17g\ngamma = %.17g\neval_epochs = %d\n"
                  "epsilon = %.17g\nmax_episode_len = %d\nexploring_starts = %s\n",
                  t.episodes, t.alpha, t.gamma, t.eval_epochs, t.epsilon, t.max_episode_len,
                  t.exploring_starts ? "true" : "false");
    out << buf;
}

}  // namespace

std::string ExperimentConfig::to_text() const {
    std::ostringstream out;
    out << "[experiment]\nenv = " << env_name << "\nout_dir = " << out_dir
        << "\ndata_seed = " << data_seed << "\nn_trajectories = " << n_trajectories
        << "\nseeds =";
    for (std::uint64_t s : seeds) out << ' ' << s;
    out << "\n\n[data]\n";
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "n_positive = %d\nn_negative = %d\ntrajectories_per_agent = %d\n"
                  "start_mode = %s\nfixed_start_fraction = %.17g\nrollout_epsilon = %.17g\n"
                  "max_traj_len = %d\nnegative_episodes = %d\nnegative_epsilon = %.17g\n"
                  "negative_groups = %d\nretry_budget = %d\n",
                  gen.n_positive, gen.n_negative, gen.trajectories_per_agent,
                  to_string(gen.start_mode).c_str(), gen.fixed_start_fraction,
                  gen.rollout_epsilon, gen.max_traj_len, gen.negative_episodes,
                  gen.negative_epsilon, gen.negative_groups, gen.retry_budget);
    out << buf << "boost_states =";
    for (StateId s : gen.boost_states) out << ' ' << s;
    std::snprintf(buf, sizeof(buf), "\nboost_fraction = %.17g\n", gen.boost_fraction);
    out << buf << "\n";
    train_text(out, "agent", gen.agent);
    out << "\n[encoder]\n";
    std::snprintf(buf, sizeof(buf),
                  "epochs = %d\nlearning_rate = %.17g\nbatch_size = %d\nhidden = %d\n"
                  "embed = %d\n",
                  encoder.epochs, encoder.learning_rate, encoder.batch_size, encoder.H,
                  encoder.E);
    out << buf << "\n[cluster]\nalgorithm = " << cluster_algorithm << "\n";
    std::snprintf(buf, sizeof(buf),
                  "k_min = %d\nk_max = %d\ncenter_seed = %llu\nalgo_seed = %llu\n"
                  "max_iters = %d\neps = %.17g\nmin_pts = %d\n",
                  xmeans.k_min, xmeans.k_max,
                  static_cast<unsigned long long>(xmeans.center_seed),
                  static_cast<unsigned long long>(xmeans.algo_seed), xmeans.max_iters,
                  dbscan.eps, dbscan.min_pts);
    out << buf << "\n";
    train_text(out, "offline", offline);
    out << "\n[behavior]\n";
    std::snprintf(buf, sizeof(buf),
                  "top_right_row_max = %d\ntop_right_col_min = %d\nmiddle_row_lo = %d\n"
                  "middle_row_hi = %d\nmiddle_col_lo = %d\nmiddle_col_hi = %d\n",
                  top_right_row_max, top_right_col_min, middle_row_lo, middle_row_hi,
                  middle_col_lo, middle_col_hi);
    out << buf;
    return out.str();
}

std::string ExperimentConfig::hash() const { return content_hash(to_text()); }

}  // namespace trajattr
