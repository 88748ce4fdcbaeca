#include "gwlab/montecarlo.hpp"

#include "gwlab/errors.hpp"
#include "gwlab/pgf_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

namespace gwlab {

namespace {

constexpr std::int64_t kBlock = 1024;

int resolve_workers(int w) {
    if (w > 0) {
        return w;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs work(begin, end) over fixed replica blocks on `workers` threads and
// returns the block results in block order.
template <class Work>
auto run_blocks(std::int64_t replicas, int workers, Work work) {
    using Block = decltype(work(std::int64_t{0}, std::int64_t{0}));
    const std::int64_t nblocks = (replicas + kBlock - 1) / kBlock;
    std::vector<Block> results(static_cast<std::size_t>(nblocks));
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto loop = [&] {
        for (;;) {
            const std::int64_t b = next.fetch_add(1);
            if (b >= nblocks) {
                return;
            }
            try {
                const std::int64_t lo = b * kBlock;
                results[static_cast<std::size_t>(b)] = work(lo, std::min(replicas, lo + kBlock));
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(nblocks);
                return;
            }
        }
    };
    const int nthreads = static_cast<int>(std::min<std::int64_t>(resolve_workers(workers), std::max<std::int64_t>(nblocks, 1)));
    if (nthreads <= 1) {
        loop();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back(loop);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return results;
}

// One generation of the whole process. Returns the number born.
std::int64_t advance(const ModelSpec& spec, std::span<const std::int64_t> cur, std::span<std::int64_t> next,
                     CounterRng& rng) {
    std::fill(next.begin(), next.end(), 0);
    const int n = spec.types();
    for (int r = 1; r <= n; ++r) {
        add_offspring_of(spec, r, cur[static_cast<std::size_t>(r - 1)], rng, next);
    }
    return std::accumulate(next.begin(), next.end(), std::int64_t{0});
}

Estimate mean_and_error(double sum, double sum_sq, std::int64_t count) {
    Estimate e;
    if (count <= 0) {
        return e;
    }
    const double n = static_cast<double>(count);
    e.mean = sum / n;
    if (count > 1) {
        const double var = std::max(0.0, (sum_sq - n * e.mean * e.mean) / (n - 1.0));
        e.std_error = std::sqrt(var / n);
    }
    return e;
}

}  // namespace

void McConfig::validate(const ModelSpec& spec) const {
    if (replicas < 1) {
        throw DomainError("replicas must be >= 1");
    }
    if (max_generations < 1 || population_cap < 1) {
        throw DomainError("max_generations and population_cap must be >= 1");
    }
    if (workers < 0) {
        throw DomainError("workers must be >= 0");
    }
    if (start_type < 1 || start_type > spec.types()) {
        throw DomainError("start_type out of range");
    }
}

void simulate(const ModelSpec& spec, const McConfig& cfg, const std::function<void(const TrajectorySample&)>& sink) {
    cfg.validate(spec);
    const auto nt = static_cast<std::size_t>(spec.types());
    auto blocks = run_blocks(cfg.replicas, cfg.workers, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<TrajectorySample> out;
        out.reserve(static_cast<std::size_t>(hi - lo));
        for (std::int64_t r = lo; r < hi; ++r) {
            CounterRng rng(cfg.seed, static_cast<std::uint64_t>(r));
            TrajectorySample s;
            s.replica = static_cast<std::uint64_t>(r);
            std::vector<std::int64_t> z(nt, 0);
            z[static_cast<std::size_t>(cfg.start_type - 1)] = 1;
            s.layers.push_back(z);
            std::int64_t born = 1;
            std::vector<std::int64_t> next(nt);
            for (std::int64_t k = 1;; ++k) {
                if (k > cfg.max_generations) {
                    s.censored = true;
                    break;
                }
                const std::int64_t alive = advance(spec, s.layers.back(), next, rng);
                born += alive;
                s.layers.push_back(next);
                if (alive == 0) {
                    s.extinction_time = k;
                    break;
                }
                if (born > cfg.population_cap) {
                    s.censored = true;
                    break;
                }
            }
            out.push_back(std::move(s));
        }
        return out;
    });
    for (const auto& block : blocks) {
        for (const auto& s : block) {
            sink(s);
        }
    }
}

std::vector<TrajectorySample> simulate(const ModelSpec& spec, const McConfig& cfg) {
    std::vector<TrajectorySample> out;
    out.reserve(static_cast<std::size_t>(cfg.replicas));
    simulate(spec, cfg, [&](const TrajectorySample& s) { out.push_back(s); });
    return out;
}

double ExtinctionHistogram::empirical_pmf(std::int64_t n) const {
    if (n < 0 || n >= static_cast<std::int64_t>(counts.size()) || replicas == 0) {
        return 0.0;
    }
    return static_cast<double>(counts[static_cast<std::size_t>(n)]) / static_cast<double>(replicas);
}

ExtinctionHistogram simulate_extinction_times(const ModelSpec& spec, const McConfig& cfg, std::int64_t n_max) {
    cfg.validate(spec);
    if (n_max < 1) {
        throw DomainError("n_max must be >= 1");
    }
    const auto nt = static_cast<std::size_t>(spec.types());
    const std::int64_t horizon = std::min(n_max, cfg.max_generations);
    auto blocks = run_blocks(cfg.replicas, cfg.workers, [&](std::int64_t lo, std::int64_t hi) {
        ExtinctionHistogram h;
        h.counts.assign(static_cast<std::size_t>(n_max + 1), 0);
        std::vector<std::int64_t> cur(nt), next(nt);
        for (std::int64_t r = lo; r < hi; ++r) {
            CounterRng rng(cfg.seed, static_cast<std::uint64_t>(r));
            std::fill(cur.begin(), cur.end(), 0);
            cur[static_cast<std::size_t>(cfg.start_type - 1)] = 1;
            std::int64_t born = 1;
            bool done = false;
            for (std::int64_t k = 1; k <= horizon; ++k) {
                const std::int64_t alive = advance(spec, cur, next, rng);
                born += alive;
                cur.swap(next);
                if (alive == 0) {
                    ++h.counts[static_cast<std::size_t>(k)];
                    done = true;
                    break;
                }
                if (born > cfg.population_cap) {
                    ++h.censored;
                    done = true;
                    break;
                }
            }
            if (!done) {
                if (horizon < n_max) {
                    ++h.censored;
                } else {
                    ++h.beyond;
                }
            }
            ++h.replicas;
        }
        return h;
    });
    ExtinctionHistogram total;
    total.counts.assign(static_cast<std::size_t>(n_max + 1), 0);
    for (const auto& h : blocks) {
        for (std::size_t k = 0; k < h.counts.size(); ++k) {
            total.counts[k] += h.counts[k];
        }
        total.beyond += h.beyond;
        total.censored += h.censored;
        total.replicas += h.replicas;
    }
    return total;
}

Estimate ConditionalEnsemble::laplace(std::span<const double> u) const {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& z : samples) {
        double v = 1.0;
        for (std::size_t l = 0; l < z.size(); ++l) {
            v *= std::pow(u[l], static_cast<double>(z[l]));
        }
        sum += v;
        sum_sq += v * v;
    }
    return mean_and_error(sum, sum_sq, static_cast<std::int64_t>(samples.size()));
}

ConditionalEnsemble conditional_ensemble(const ModelSpec& spec, std::int64_t n, std::int64_t m, const McConfig& cfg,
                                         double min_expected) {
    cfg.validate(spec);
    if (n < 2 || m < 1 || m > n - 1) {
        throw DomainError("conditional ensemble needs 1 <= m <= n-1");
    }
    if (n > cfg.max_generations) {
        throw DomainError("n exceeds max_generations");
    }
    const double p = extinction_pmf(spec, cfg.start_type, n).pmf[static_cast<std::size_t>(n)];
    const double expected = p * static_cast<double>(cfg.replicas);
    if (!(expected >= min_expected)) {
        const double needed = p > 0.0 ? std::ceil(min_expected / p) : std::numeric_limits<double>::infinity();
        char msg[256];
        std::snprintf(msg, sizeof msg,
                      "rejection sampling infeasible: exact P(T=%lld) = %.3g gives %.3g expected acceptances; "
                      "about %.0f replicas are needed for %g",
                      static_cast<long long>(n), p, expected, needed, min_expected);
        throw InfeasibleError(msg);
    }
    const auto nt = static_cast<std::size_t>(spec.types());
    struct Block {
        std::vector<std::vector<std::int64_t>> samples;
        std::int64_t censored = 0;
    };
    auto blocks = run_blocks(cfg.replicas, cfg.workers, [&](std::int64_t lo, std::int64_t hi) {
        Block blk;
        std::vector<std::int64_t> cur(nt), next(nt), at_m(nt);
        for (std::int64_t r = lo; r < hi; ++r) {
            CounterRng rng(cfg.seed, static_cast<std::uint64_t>(r));
            std::fill(cur.begin(), cur.end(), 0);
            cur[static_cast<std::size_t>(cfg.start_type - 1)] = 1;
            std::int64_t born = 1;
            bool accepted = false;
            for (std::int64_t k = 1; k <= n; ++k) {
                const std::int64_t alive = advance(spec, cur, next, rng);
                born += alive;
                cur.swap(next);
                if (k == m) {
                    at_m = cur;
                }
                if (alive == 0) {
                    accepted = k == n;
                    break;
                }
                if (k == n) {
                    break;
                }
                if (born > cfg.population_cap) {
                    ++blk.censored;
                    break;
                }
            }
            if (accepted) {
                blk.samples.push_back(at_m);
            }
        }
        return blk;
    });
    ConditionalEnsemble ens;
    ens.n = n;
    ens.m = m;
    ens.replicas = cfg.replicas;
    ens.exact_probability = p;
    for (auto& b : blocks) {
        ens.censored += b.censored;
        for (auto& s : b.samples) {
            ens.samples.push_back(std::move(s));
        }
    }
    ens.accepted = static_cast<std::int64_t>(ens.samples.size());
    return ens;
}

Estimate ProgenyStats::one_minus_laplace(double lambda, bool all) const {
    const auto& v = all ? w_all : w;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::int64_t x : v) {
        const double t = -std::expm1(-lambda * static_cast<double>(x));
        sum += t;
        sum_sq += t * t;
    }
    return mean_and_error(sum, sum_sq, static_cast<std::int64_t>(v.size()));
}

ProgenyStats total_progeny(const ModelSpec& spec, const McConfig& cfg, int p, int i, int j) {
    cfg.validate(spec);
    const int n = spec.types();
    if (!(1 <= p && p <= i && i < j && j <= n)) {
        throw DomainError("total_progeny needs p <= i < j <= N");
    }
    const auto nt = static_cast<std::size_t>(n);
    struct Block {
        std::vector<std::int64_t> w, w_all;
        std::vector<std::uint8_t> censored;
    };
    auto blocks = run_blocks(cfg.replicas, cfg.workers, [&](std::int64_t lo, std::int64_t hi) {
        Block blk;
        std::vector<std::int64_t> cur(nt), next(nt);
        for (std::int64_t r = lo; r < hi; ++r) {
            CounterRng rng(cfg.seed, static_cast<std::uint64_t>(r));
            std::fill(cur.begin(), cur.end(), 0);
            cur[static_cast<std::size_t>(p - 1)] = 1;
            std::int64_t born = 1;
            std::int64_t wj = 0;
            std::int64_t wall = 0;
            bool censored = false;
            for (std::int64_t k = 1;; ++k) {
                if (k > cfg.max_generations) {
                    censored = true;
                    break;
                }
                std::fill(next.begin(), next.end(), 0);
                for (int rr = p; rr <= i; ++rr) {
                    add_offspring_of(spec, rr, cur[static_cast<std::size_t>(rr - 1)], rng, next);
                }
                std::int64_t alive = 0;
                for (int t = p; t <= i; ++t) {
                    alive += next[static_cast<std::size_t>(t - 1)];
                }
                for (int t = i + 1; t <= n; ++t) {
                    wall += next[static_cast<std::size_t>(t - 1)];
                }
                wj += next[static_cast<std::size_t>(j - 1)];
                born += alive;
                cur.swap(next);
                if (alive == 0) {
                    break;
                }
                if (born > cfg.population_cap) {
                    censored = true;
                    break;
                }
            }
            blk.w.push_back(wj);
            blk.w_all.push_back(wall);
            blk.censored.push_back(censored ? 1 : 0);
        }
        return blk;
    });
    ProgenyStats st;
    st.p = p;
    st.i = i;
    st.j = j;
    st.w.reserve(static_cast<std::size_t>(cfg.replicas));
    st.w_all.reserve(static_cast<std::size_t>(cfg.replicas));
    st.censored.reserve(static_cast<std::size_t>(cfg.replicas));
    for (const auto& b : blocks) {
        st.w.insert(st.w.end(), b.w.begin(), b.w.end());
        st.w_all.insert(st.w_all.end(), b.w_all.begin(), b.w_all.end());
        st.censored.insert(st.censored.end(), b.censored.begin(), b.censored.end());
    }
    st.censored_count = std::count(st.censored.begin(), st.censored.end(), std::uint8_t{1});
    return st;
}

TreeProfile tree_export(const TrajectorySample& sample) {
    TreeProfile t;
    t.censored = sample.censored;
    if (sample.censored) {
        t.layers = sample.layers;
        t.height = static_cast<std::int64_t>(sample.layers.size());
        return t;
    }
    t.height = sample.extinction_time;
    t.layers.assign(sample.layers.begin(), sample.layers.begin() + sample.extinction_time);
    return t;
}

}  // namespace gwlab
