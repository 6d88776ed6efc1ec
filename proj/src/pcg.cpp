#include "trajopt/pcg.hpp"

#include <barrier>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "trajopt/parallel.hpp"

namespace trajopt {

namespace {

using Clock = std::chrono::steady_clock;
using Eigen::VectorXd;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void validate_inputs(const BlockTriMatrix& S, const Preconditioner& P, const VectorXd& gamma,
                     const VectorXd& lambda0) {
  if (S.empty()) {
    throw std::invalid_argument("pcg: empty system matrix");
  }
  if (gamma.size() != S.dim()) {
    throw std::invalid_argument("pcg: expected gamma of length " + std::to_string(S.dim()) +
                                ", got " + std::to_string(gamma.size()));
  }
  if (lambda0.size() != S.dim()) {
    throw std::invalid_argument("pcg: expected lambda0 of length " + std::to_string(S.dim()) +
                                ", got " + std::to_string(lambda0.size()));
  }
  if (P.kind != PrecondKind::identity && P.phi_inv.dim() != S.dim()) {
    throw std::invalid_argument("pcg: preconditioner dimension " +
                                std::to_string(P.phi_inv.dim()) + " does not match system " +
                                std::to_string(S.dim()));
  }
  const double asym_tol = 1e-9 * std::max(1.0, S.max_abs());
  if (S.max_asymmetry() > asym_tol) {
    throw std::invalid_argument("pcg: S is not structurally symmetric (asymmetry " +
                                std::to_string(S.max_asymmetry()) + ")");
  }
}

int resolve_max_iter(const PcgConfig& cfg, const BlockTriMatrix& S) {
  return cfg.max_iter > 0 ? cfg.max_iter : S.dim();
}

}  // namespace

PcgResult pcg_solve(const BlockTriMatrix& S, const Preconditioner& P, const VectorXd& gamma,
                    const VectorXd& lambda0, const PcgConfig& cfg) {
  validate_inputs(S, P, gamma, lambda0);
  const auto start = Clock::now();
  const int max_iter = resolve_max_iter(cfg, S);

  VectorXd lambda = lambda0;
  VectorXd r = gamma - S.matvec(lambda);
  VectorXd r_tilde = apply_preconditioner(P, r);
  VectorXd p = r_tilde;
  double eta = r.dot(r_tilde);
  if (!std::isfinite(eta)) {
    throw std::runtime_error("pcg: non-finite initial residual");
  }

  SolveReport rep;
  rep.exit_eta = eta;
  if (eta < cfg.epsilon) {
    // Warm start already satisfies the exit test; skip the loop entirely.
    rep.converged = true;
    rep.wall_time = seconds_since(start);
    return {std::move(lambda), std::move(rep)};
  }

  double best_eta = eta;
  VectorXd best_lambda = lambda;
  VectorXd Sp(S.dim());

  for (int i = 1; i <= max_iter; ++i) {
    Sp = S.matvec(p);
    const double upsilon = p.dot(Sp);
    if (!std::isfinite(upsilon)) {
      throw std::runtime_error("pcg: non-finite p'Sp at iteration " + std::to_string(i));
    }
    if (upsilon <= 0.0) {
      throw PcgBreakdown("pcg: p'Sp = " + std::to_string(upsilon) + " at iteration " +
                         std::to_string(i) + "; S is not positive definite on the search space");
    }
    const double alpha = eta / upsilon;
    r -= alpha * Sp;
    lambda += alpha * p;
    r_tilde = apply_preconditioner(P, r);
    const double eta_prime = r.dot(r_tilde);
    if (!std::isfinite(eta_prime)) {
      throw std::runtime_error("pcg: non-finite iterate at iteration " + std::to_string(i));
    }

    if (cfg.collect_trace) rep.trace.push_back(eta_prime);
    if (cfg.check_residual_drift) {
      const double true_norm = (gamma - S.matvec(lambda)).norm();
      const double drift = std::abs(r.norm() - true_norm) /
                           std::max(true_norm, std::numeric_limits<double>::min());
      rep.max_residual_drift = std::max(rep.max_residual_drift, drift);
    }
    if (eta_prime < best_eta) {
      best_eta = eta_prime;
      best_lambda = lambda;
    }

    rep.iterations = i;
    rep.exit_eta = eta_prime;
    if (eta_prime < cfg.epsilon) {
      rep.converged = true;
      rep.wall_time = seconds_since(start);
      return {std::move(lambda), std::move(rep)};
    }
    const double beta = eta_prime / eta;
    p = r_tilde + beta * p;
    eta = eta_prime;
  }

  rep.converged = false;
  rep.wall_time = seconds_since(start);
  return {std::move(best_lambda), std::move(rep)};
}

namespace {

// Shared state of one block-parallel solve. Workers own disjoint block ranges
// of every vector; barriers order the halo reads and scalar reductions.
struct ParallelSolveState {
  VectorXd lambda, r, r_tilde, p, Sp, term, scratch;
  std::vector<double> slots;
  double eta = 0.0, eta_prime = 0.0, upsilon = 0.0, alpha = 0.0, beta = 0.0;
  double best_eta = std::numeric_limits<double>::infinity();
  VectorXd best_lambda;
  bool done = false;
  bool converged = false;
  bool breakdown = false;
  bool nonfinite = false;
  int iterations = 0;
  double exit_eta = 0.0;
  std::string error;
  std::vector<double> trace;
};

double reduce_slots(const std::vector<double>& slots, bool deterministic) {
  return deterministic ? tree_reduce(slots) : linear_reduce(slots);
}

}  // namespace

PcgResult pcg_solve_block_parallel(const BlockTriMatrix& S, const Preconditioner& P,
                                   const VectorXd& gamma, const VectorXd& lambda0,
                                   const PcgConfig& cfg) {
  validate_inputs(S, P, gamma, lambda0);
  const auto start = Clock::now();
  const int max_iter = resolve_max_iter(cfg, S);
  const int blocks = S.block_rows();
  const int nb = S.block_dim();
  const int dim = S.dim();

  int workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, blocks));

  ParallelSolveState st;
  st.lambda = lambda0;
  st.r.resize(dim);
  st.r_tilde.resize(dim);
  st.p.resize(dim);
  st.Sp.resize(dim);
  st.slots.assign(blocks, 0.0);
  const bool poly = (P.kind == PrecondKind::poly_split);
  if (poly) {
    st.term.resize(dim);
    st.scratch.resize(dim);
  }

  std::barrier sync(workers);

  // r~ blocks from the current r. poly_split runs the splitting series as
  // staged matvecs with a halo sync between stages; the cheaper kinds read at
  // most a one-block halo of r, which is already stable when this is called.
  auto apply_precond_blocks = [&](int blo, int bhi) {
    if (P.kind == PrecondKind::identity) {
      for (int b = blo; b < bhi; ++b) {
        st.r_tilde.segment(static_cast<Eigen::Index>(b) * nb, nb) =
            st.r.segment(static_cast<Eigen::Index>(b) * nb, nb);
      }
      return;
    }
    if (!poly) {
      for (int b = blo; b < bhi; ++b) {
        P.phi_inv.matvec_block(b, st.r, st.r_tilde.segment(static_cast<Eigen::Index>(b) * nb, nb));
      }
      return;
    }
    for (int b = blo; b < bhi; ++b) {
      P.phi_inv.matvec_block(b, st.r, st.term.segment(static_cast<Eigen::Index>(b) * nb, nb));
      st.r_tilde.segment(static_cast<Eigen::Index>(b) * nb, nb) =
          st.term.segment(static_cast<Eigen::Index>(b) * nb, nb);
    }
    for (int j = 0; j < P.order; ++j) {
      sync.arrive_and_wait();  // term stable
      for (int b = blo; b < bhi; ++b) {
        P.remainder.matvec_block(b, st.term,
                                 st.scratch.segment(static_cast<Eigen::Index>(b) * nb, nb));
      }
      sync.arrive_and_wait();  // scratch stable
      for (int b = blo; b < bhi; ++b) {
        VectorXd next(nb);
        P.phi_inv.matvec_block(b, st.scratch, next);
        st.term.segment(static_cast<Eigen::Index>(b) * nb, nb) = next;
        st.r_tilde.segment(static_cast<Eigen::Index>(b) * nb, nb) += next;
      }
    }
  };

  auto worker = [&](int w) {
    const int chunk = (blocks + workers - 1) / workers;
    const int blo = w * chunk;
    const int bhi = std::min(blocks, blo + chunk);

    // Initialization: r = gamma - S lambda0 (lambda0 is read-only here).
    for (int b = blo; b < bhi; ++b) {
      VectorXd sx(nb);
      S.matvec_block(b, st.lambda, sx);
      st.r.segment(static_cast<Eigen::Index>(b) * nb, nb) =
          gamma.segment(static_cast<Eigen::Index>(b) * nb, nb) - sx;
    }
    sync.arrive_and_wait();  // r stable
    apply_precond_blocks(blo, bhi);
    for (int b = blo; b < bhi; ++b) {
      const auto rb = st.r.segment(static_cast<Eigen::Index>(b) * nb, nb);
      const auto rtb = st.r_tilde.segment(static_cast<Eigen::Index>(b) * nb, nb);
      st.p.segment(static_cast<Eigen::Index>(b) * nb, nb) = rtb;
      st.slots[b] = rb.dot(rtb);
    }
    sync.arrive_and_wait();  // eta slots complete
    if (w == 0) {
      st.eta = reduce_slots(st.slots, cfg.deterministic_reductions);
      st.exit_eta = st.eta;
      if (!std::isfinite(st.eta)) {
        st.nonfinite = true;
        st.error = "pcg: non-finite initial residual";
        st.done = true;
      } else if (st.eta < cfg.epsilon) {
        st.converged = true;
        st.done = true;
      }
      st.best_eta = st.eta;
      st.best_lambda = st.lambda;
    }
    sync.arrive_and_wait();  // eta visible
    if (st.done) return;

    for (int i = 1; i <= max_iter; ++i) {
      for (int b = blo; b < bhi; ++b) {
        // Load p_{b-1}, p_{b+1}: the one-block halo of the tridiagonal product.
        VectorXd ups(nb);
        S.matvec_block(b, st.p, ups);
        st.Sp.segment(static_cast<Eigen::Index>(b) * nb, nb) = ups;
        st.slots[b] = st.p.segment(static_cast<Eigen::Index>(b) * nb, nb).dot(ups);
      }
      sync.arrive_and_wait();  // barrier point 1: upsilon reduction
      if (w == 0) {
        st.upsilon = reduce_slots(st.slots, cfg.deterministic_reductions);
        if (!std::isfinite(st.upsilon)) {
          st.nonfinite = true;
          st.error = "pcg: non-finite p'Sp at iteration " + std::to_string(i);
          st.done = true;
        } else if (st.upsilon <= 0.0) {
          st.breakdown = true;
          st.error = "pcg: p'Sp = " + std::to_string(st.upsilon) + " at iteration " +
                     std::to_string(i) + "; S is not positive definite on the search space";
          st.done = true;
        } else {
          st.alpha = st.eta / st.upsilon;
        }
      }
      sync.arrive_and_wait();
      if (st.done) return;

      for (int b = blo; b < bhi; ++b) {
        st.lambda.segment(static_cast<Eigen::Index>(b) * nb, nb) +=
            st.alpha * st.p.segment(static_cast<Eigen::Index>(b) * nb, nb);
        st.r.segment(static_cast<Eigen::Index>(b) * nb, nb) -=
            st.alpha * st.Sp.segment(static_cast<Eigen::Index>(b) * nb, nb);
      }
      sync.arrive_and_wait();  // barrier point 2: lambda/r update done, r halo stable

      apply_precond_blocks(blo, bhi);
      for (int b = blo; b < bhi; ++b) {
        st.slots[b] = st.r.segment(static_cast<Eigen::Index>(b) * nb, nb)
                          .dot(st.r_tilde.segment(static_cast<Eigen::Index>(b) * nb, nb));
      }
      sync.arrive_and_wait();  // barrier point 3: eta' reduction
      if (w == 0) {
        st.eta_prime = reduce_slots(st.slots, cfg.deterministic_reductions);
        st.iterations = i;
        st.exit_eta = st.eta_prime;
        if (cfg.collect_trace) st.trace.push_back(st.eta_prime);
        if (!std::isfinite(st.eta_prime)) {
          st.nonfinite = true;
          st.error = "pcg: non-finite iterate at iteration " + std::to_string(i);
          st.done = true;
        } else {
          if (st.eta_prime < st.best_eta) {
            st.best_eta = st.eta_prime;
            st.best_lambda = st.lambda;
          }
          if (st.eta_prime < cfg.epsilon) {
            st.converged = true;
            st.done = true;
          } else if (i == max_iter) {
            st.done = true;
          } else {
            st.beta = st.eta_prime / st.eta;
            st.eta = st.eta_prime;
          }
        }
      }
      sync.arrive_and_wait();
      if (st.done) return;

      for (int b = blo; b < bhi; ++b) {
        st.p.segment(static_cast<Eigen::Index>(b) * nb, nb) =
            st.r_tilde.segment(static_cast<Eigen::Index>(b) * nb, nb) +
            st.beta * st.p.segment(static_cast<Eigen::Index>(b) * nb, nb);
      }
      sync.arrive_and_wait();  // iteration boundary: p halo stable for the next product
    }
  };

  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }

  if (st.nonfinite) throw std::runtime_error(st.error);
  if (st.breakdown) throw PcgBreakdown(st.error);

  SolveReport rep;
  rep.iterations = st.iterations;
  rep.exit_eta = st.exit_eta;
  rep.converged = st.converged;
  rep.trace = std::move(st.trace);
  rep.wall_time = seconds_since(start);

  PcgResult out;
  out.lambda = st.converged ? std::move(st.lambda) : std::move(st.best_lambda);
  out.report = std::move(rep);
  return out;
}

PcgResult pcg_solve_auto(const BlockTriMatrix& S, const Preconditioner& P, const VectorXd& gamma,
                         const VectorXd& lambda0, const PcgConfig& cfg) {
  return cfg.variant == PcgVariant::block_parallel
             ? pcg_solve_block_parallel(S, P, gamma, lambda0, cfg)
             : pcg_solve(S, P, gamma, lambda0, cfg);
}

}  // namespace trajopt
