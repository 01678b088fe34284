#include "trajattr/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "trajattr/errors.hpp"
#include "trajattr/hash.hpp"
#include "trajattr/kernels.hpp"
#include "trajattr/rng.hpp"

namespace trajattr {

void XMeansConfig::validate() const {
    if (k_min < 1 || k_min > k_max) throw ValidationError("need 1 <= k_min <= k_max");
    if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
}

std::string XMeansConfig::hash() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "k_min=%d;k_max=%d;center_seed=%llu;algo_seed=%llu;iters=%d",
                  k_min, k_max, static_cast<unsigned long long>(center_seed),
                  static_cast<unsigned long long>(algo_seed), max_iters);
    return content_hash(buf);
}

void DbscanConfig::validate() const {
    if (!(eps > 0.0)) throw ValidationError("eps must be positive");
    if (min_pts < 1) throw ValidationError("min_pts must be at least 1");
}

std::string DbscanConfig::hash() const {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "eps=%.17g;min_pts=%d", eps, min_pts);
    return content_hash(buf);
}

namespace {

void check_points(const std::vector<Point>& points) {
    if (points.empty()) throw ValidationError("no points to cluster");
    const std::size_t dim = points.front().size();
    if (dim == 0) throw ValidationError("points must have at least one dimension");
    for (const Point& p : points)
        if (p.size() != dim) throw ValidationError("points differ in dimension");
}

double d2(const Point& a, const Point& b) {
    return kern::sq_dist(a.data(), b.data(), a.size());
}

// Assignment step. Ties go to the lowest centroid index.
void assign_all(const std::vector<Point>& points, const std::vector<Point>& centroids,
                std::vector<int>& labels) {
    for (std::size_t i = 0; i < points.size(); ++i) {
        int best = 0;
        double bd = d2(points[i], centroids[0]);
        for (std::size_t c = 1; c < centroids.size(); ++c) {
            const double d = d2(points[i], centroids[c]);
            if (d < bd) {
                bd = d;
                best = static_cast<int>(c);
            }
        }
        labels[i] = best;
    }
}

void recompute_centroids(const std::vector<Point>& points, const std::vector<int>& labels,
                         std::vector<Point>& centroids, std::vector<int>& sizes) {
    const std::size_t dim = points.front().size();
    for (Point& c : centroids) std::fill(c.begin(), c.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        Point& c = centroids[static_cast<std::size_t>(labels[i])];
        kern::axpy(1.0, points[i].data(), c.data(), dim);
        ++sizes[static_cast<std::size_t>(labels[i])];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c)
        if (sizes[c] > 0)
            kern::scale(centroids[c].data(), dim, 1.0 / static_cast<double>(sizes[c]));
}

// Refill empty clusters with the point farthest from its own centroid
// (lowest index on ties). Labels and centroids are patched in place; the
// donor cluster is guaranteed to keep at least one member because the donor
// with 1 member contributes distance 0 once its centroid sits on it.
void fix_empties(const std::vector<Point>& points, std::vector<int>& labels,
                 std::vector<Point>& centroids, std::vector<int>& sizes) {
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (sizes[c] > 0) continue;
        int pick = -1;
        double far = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (sizes[static_cast<std::size_t>(labels[i])] <= 1) continue;
            const double d = d2(points[i], centroids[static_cast<std::size_t>(labels[i])]);
            if (d > far) {
                far = d;
                pick = static_cast<int>(i);
            }
        }
        if (pick < 0) {
            // every remaining cluster is a singleton: duplicate coordinates,
            // claim the lowest-index point whose cluster can spare nothing --
            // only possible when points repeat, so distances are all zero
            for (std::size_t i = 0; i < points.size(); ++i)
                if (sizes[static_cast<std::size_t>(labels[i])] > 1) { pick = static_cast<int>(i); break; }
        }
        if (pick < 0) throw StageError("cluster", "cannot refill empty cluster");
        --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(pick)])];
        labels[static_cast<std::size_t>(pick)] = static_cast<int>(c);
        sizes[c] = 1;
        centroids[c] = points[static_cast<std::size_t>(pick)];
    }
}

KMeansResult lloyd(const std::vector<Point>& points, std::vector<Point> centroids,
                   int max_iters) {
    std::vector<int> labels(points.size(), 0);
    std::vector<int> sizes(centroids.size(), 0);
    std::vector<int> prev;
    for (int it = 0; it < max_iters; ++it) {
        assign_all(points, centroids, labels);
        recompute_centroids(points, labels, centroids, sizes);
        fix_empties(points, labels, centroids, sizes);
        if (labels == prev) break;
        prev = labels;
    }
    return {std::move(labels), std::move(centroids)};
}

std::vector<Point> kmeanspp_init(const std::vector<Point>& points, int k, rng::Engine& eng) {
    std::vector<Point> centroids;
    centroids.reserve(static_cast<std::size_t>(k));
    centroids.push_back(points[rng::uniform_below(eng, points.size())]);

    std::vector<double> dist(points.size());
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = d2(points[i], centroids[0]);
            for (std::size_t c = 1; c < centroids.size(); ++c)
                best = std::min(best, d2(points[i], centroids[c]));
            dist[i] = best;
            total += best;
        }
        std::size_t pick;
        if (total > 0.0) {
            const double target = rng::uniform01(eng) * total;
            double run = 0.0;
            pick = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                run += dist[i];
                if (run > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng::uniform_below(eng, points.size());
        }
        centroids.push_back(points[pick]);
    }
    return centroids;
}

}  // namespace

KMeansResult kmeans(const std::vector<Point>& points, int k, std::uint64_t seed,
                    int max_iters) {
    check_points(points);
    if (k < 1) throw ValidationError("k must be at least 1");
    if (static_cast<std::size_t>(k) > points.size())
        throw ValidationError("k exceeds the number of points");
    if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
    rng::Engine eng = rng::make_engine(seed, "kmeans-init", 0);
    return lloyd(points, kmeanspp_init(points, k, eng), max_iters);
}

double bic_score(const std::vector<Point>& points, const std::vector<int>& labels,
                 const std::vector<Point>& centroids, bool* degenerate) {
    check_points(points);
    if (labels.size() != points.size()) throw ValidationError("labels/points size mismatch");
    const std::size_t k = centroids.size();
    if (k == 0) throw ValidationError("no centroids");
    std::vector<std::size_t> sizes(k, 0);
    double sse = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int l = labels[i];
        if (l < 0 || static_cast<std::size_t>(l) >= k)
            throw ValidationError("label out of range in bic_score");
        ++sizes[static_cast<std::size_t>(l)];
        sse += d2(points[i], centroids[static_cast<std::size_t>(l)]);
    }

    const double n = static_cast<double>(points.size());
    const double m = static_cast<double>(points.front().size());
    double var = sse / (n * m);  // shared spherical per-coordinate variance
    if (degenerate) *degenerate = false;
    if (var < 1e-12) {
        var = 1e-12;
        if (degenerate) *degenerate = true;
    }

    double loglik = -0.5 * n * m * std::log(2.0 * M_PI * var) - sse / (2.0 * var);
    for (std::size_t c = 0; c < k; ++c)
        if (sizes[c] > 0)
            loglik += static_cast<double>(sizes[c]) *
                      (std::log(static_cast<double>(sizes[c])) - std::log(n));

    const double p = static_cast<double>(k) * (m + 1.0) + 1.0;
    return loglik - 0.5 * p * std::log(n);
}

ClusterAssignment xmeans(const std::vector<Point>& points, const XMeansConfig& cfg) {
    cfg.validate();
    check_points(points);
    if (points.size() < static_cast<std::size_t>(cfg.k_min))
        throw ValidationError("fewer points than k_min");

    KMeansResult cur = kmeans(points, cfg.k_min, cfg.center_seed, cfg.max_iters);

    for (int round = 0;; ++round) {
        const int k = static_cast<int>(cur.centroids.size());
        if (k >= cfg.k_max) break;

        // Gather members per cluster.
        std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < points.size(); ++i)
            members[static_cast<std::size_t>(cur.labels[i])].push_back(i);

        std::vector<Point> next;
        bool split_any = false;
        for (int c = 0; c < k; ++c) {
            const auto& idx = members[static_cast<std::size_t>(c)];
            bool accept = false;
            KMeansResult split;
            if (idx.size() >= 2 &&
                static_cast<int>(next.size()) + (k - c) < cfg.k_max) {
                std::vector<Point> sub;
                sub.reserve(idx.size());
                for (std::size_t i : idx) sub.push_back(points[i]);

                rng::Engine eng = rng::make_engine(
                    cfg.algo_seed, "xmeans-split",
                    static_cast<std::uint64_t>(round) * 4096u + static_cast<std::uint64_t>(c));
                split = lloyd(sub, kmeanspp_init(sub, 2, eng), cfg.max_iters);

                // A child with a single member has zero variance by
                // construction, which the clamp would score as a near-certain
                // win; such splits say nothing about structure, so they are
                // never accepted.
                std::size_t left = 0;
                for (int l : split.labels) left += l == 0 ? 1u : 0u;
                if (left >= 2 && sub.size() - left >= 2) {
                    const std::vector<int> one(sub.size(), 0);
                    const std::vector<Point> parent{cur.centroids[static_cast<std::size_t>(c)]};
                    accept = bic_score(sub, split.labels, split.centroids) >
                             bic_score(sub, one, parent);
                }
            }
            if (accept) {
                next.push_back(split.centroids[0]);
                next.push_back(split.centroids[1]);
                split_any = true;
            } else {
                next.push_back(cur.centroids[static_cast<std::size_t>(c)]);
            }
        }
        if (!split_any) break;
        cur = lloyd(points, std::move(next), cfg.max_iters);
    }

    ClusterAssignment out;
    out.labels = std::move(cur.labels);
    out.k = static_cast<int>(cur.centroids.size());
    out.centroids = std::move(cur.centroids);
    return out;
}

ClusterAssignment dbscan(const std::vector<Point>& points, const DbscanConfig& cfg) {
    cfg.validate();
    check_points(points);
    const std::size_t n = points.size();
    const double eps2 = cfg.eps * cfg.eps;

    // Neighborhoods include the point itself.
    std::vector<std::vector<std::size_t>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) {
        nbrs[i].push_back(i);
        for (std::size_t j = i + 1; j < n; ++j)
            if (d2(points[i], points[j]) <= eps2) {
                nbrs[i].push_back(j);
                nbrs[j].push_back(i);
            }
    }
    std::vector<char> core(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        core[i] = nbrs[i].size() >= static_cast<std::size_t>(cfg.min_pts) ? 1 : 0;

    // Connected components over core points.
    std::vector<int> comp(n, -1);
    int ncomp = 0;
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || comp[i] >= 0) continue;
        comp[i] = ncomp;
        stack.assign(1, i);
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v : nbrs[u]) {
                if (!core[v] || comp[v] >= 0) continue;
                comp[v] = ncomp;
                stack.push_back(v);
            }
        }
        ++ncomp;
    }

    // Border points join the nearest core neighbor's component; distance
    // ties fall to the component holding the lexicographically smallest
    // point, keeping the result a pure function of the geometry.
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        double best = std::numeric_limits<double>::infinity();
        int pick = -1;
        for (std::size_t v : nbrs[i]) {
            if (!core[v]) continue;
            const double d = d2(points[i], points[v]);
            if (d < best) {
                best = d;
                pick = comp[v];
            } else if (d == best && pick >= 0 && comp[v] != pick) {
                // compare the components' smallest member points
                const Point* a = nullptr;
                const Point* b = nullptr;
                for (std::size_t w = 0; w < n; ++w) {
                    if (!core[w]) continue;
                    if (comp[w] == comp[v] &&
                        (!a || std::lexicographical_compare(points[w].begin(), points[w].end(),
                                                            a->begin(), a->end())))
                        a = &points[w];
                    if (comp[w] == pick &&
                        (!b || std::lexicographical_compare(points[w].begin(), points[w].end(),
                                                            b->begin(), b->end())))
                        b = &points[w];
                }
                if (a && b && std::lexicographical_compare(a->begin(), a->end(), b->begin(), b->end()))
                    pick = comp[v];
            }
        }
        comp[i] = pick;  // stays -1 for noise
    }

    // Canonical label order: sort components by their lexicographically
    // smallest member point.
    std::vector<const Point*> rep(static_cast<std::size_t>(ncomp), nullptr);
    for (std::size_t i = 0; i < n; ++i) {
        if (comp[i] < 0) continue;
        const Point*& r = rep[static_cast<std::size_t>(comp[i])];
        if (!r || std::lexicographical_compare(points[i].begin(), points[i].end(), r->begin(),
                                               r->end()))
            r = &points[i];
    }
    std::vector<int> order(static_cast<std::size_t>(ncomp));
    for (int c = 0; c < ncomp; ++c) order[static_cast<std::size_t>(c)] = c;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::lexicographical_compare(rep[static_cast<std::size_t>(a)]->begin(),
                                            rep[static_cast<std::size_t>(a)]->end(),
                                            rep[static_cast<std::size_t>(b)]->begin(),
                                            rep[static_cast<std::size_t>(b)]->end());
    });
    std::vector<int> relabel(static_cast<std::size_t>(ncomp));
    for (int newl = 0; newl < ncomp; ++newl)
        relabel[static_cast<std::size_t>(order[static_cast<std::size_t>(newl)])] = newl;

    ClusterAssignment out;
    out.k = ncomp;
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.labels[i] = comp[i] < 0 ? -1 : relabel[static_cast<std::size_t>(comp[i])];
    return out;
}

void save_assignment_csv(const ClusterAssignment& a, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << "point_index,label\n";
    for (std::size_t i = 0; i < a.labels.size(); ++i) out << i << ',' << a.labels[i] << "\n";
    if (!out) throw ValidationError("write failed: " + path);
}

ClusterAssignment load_assignment_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "point_index,label")
        throw ValidationError("bad assignment header in " + path);
    ClusterAssignment a;
    int lineno = 1;
    int maxl = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string idx, lab;
        if (!std::getline(ss, idx, ',') || !std::getline(ss, lab))
            throw ValidationError(path + " line " + std::to_string(lineno) + ": not index,label");
        try {
            if (std::stoul(idx) != a.labels.size())
                throw ValidationError(path + " line " + std::to_string(lineno) +
                                      ": indices must be consecutive from 0");
            a.labels.push_back(std::stoi(lab));
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError(path + " line " + std::to_string(lineno) + ": bad number");
        }
        maxl = std::max(maxl, a.labels.back());
    }
    if (a.labels.empty()) throw ValidationError("no assignments in " + path);
    a.k = maxl + 1;
    return a;
}

}  // namespace trajattr
