//! Named experiments and the claims each one measures.

/// A claim the laboratory measures, keyed by a short stable name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Claim {
    pub key: &'static str,
    pub summary: &'static str,
}

pub const CLAIMS: &[Claim] = &[
    Claim { key: "gbm-dynamics", summary: "stock follows geometric Brownian motion" },
    Claim { key: "quadratic-variation", summary: "realized variation of the stock converges to sigma^2 x^2 dt" },
    Claim { key: "call-formula", summary: "closed-form call value" },
    Claim { key: "partial-derivatives", summary: "delta, gamma, theta and the holdings read from the formula" },
    Claim { key: "replication-identity", summary: "w = w1 x + beta b and its drift form" },
    Claim { key: "pricing-pde", summary: "the closed form solves the pricing PDE" },
    Claim { key: "physical-expectation", summary: "expected payoff and option drift under the physical measure" },
    Claim { key: "discrete-budget", summary: "ex-post discrete self-financing condition" },
    Claim { key: "discrete-residual", summary: "per-step residual of formula holdings and its limit" },
    Claim { key: "tracking-error", summary: "terminal hedge error against the payoff" },
    Claim { key: "theta-terminal", summary: "theta = -(w1 + beta) vanishes at maturity" },
    Claim { key: "increment-comparison", summary: "pre-move against post-move valuation of trades" },
    Claim { key: "ex-ante-cross-term", summary: "E[d alpha dx] / dt tends to gamma sigma^2 x^2" },
    Claim { key: "two-step-identity", summary: "two-step rebalancing identity and its cross terms" },
    Claim { key: "kappa-lambda-split", summary: "drift and diffusion integrands of theta" },
    Claim { key: "theta-integral", summary: "theta_T = theta_t0 + int kappa dt + int lambda dW" },
    Claim { key: "unconditional-chain", summary: "covariance, variance and correlation chain given F_t0" },
    Claim { key: "conditional-correlation", summary: "correlation of the integrals given F_t1" },
    Claim { key: "lattice-difference-equation", summary: "one-step binomial pricing rule" },
    Claim { key: "lattice-convergence", summary: "binomial value converges to the closed form" },
    Claim { key: "beta-relations", summary: "single-factor return relations on the lattice" },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Price,
    Greeks,
    Hedge,
    SfcScan,
    ThetaCheck,
    Increments,
    ExAnte,
    Decompose,
    A1Stats,
    A1Conditional,
    CrrConverge,
    BetaCheck,
    PhysicalPrice,
}

#[derive(Debug, Clone, Copy)]
pub struct Entry {
    pub experiment: Experiment,
    pub name: &'static str,
    pub summary: &'static str,
    pub claims: &'static [&'static str],
}

pub const REGISTRY: &[Entry] = &[
    Entry {
        experiment: Experiment::Price,
        name: "price",
        summary: "closed-form call value and d-values",
        claims: &["call-formula"],
    },
    Entry {
        experiment: Experiment::Greeks,
        name: "greeks",
        summary: "partial derivatives, replication identities and PDE residual",
        claims: &["partial-derivatives", "replication-identity", "pricing-pde"],
    },
    Entry {
        experiment: Experiment::Hedge,
        name: "hedge",
        summary: "discrete hedge ledgers in both modes, tracking error and accounting checks",
        claims: &["gbm-dynamics", "discrete-budget", "discrete-residual", "tracking-error", "two-step-identity"],
    },
    Entry {
        experiment: Experiment::SfcScan,
        name: "sfc-scan",
        summary: "residual, tracking error and cross-term scaling across grid refinements",
        claims: &["discrete-residual", "tracking-error", "two-step-identity", "quadratic-variation"],
    },
    Entry {
        experiment: Experiment::ThetaCheck,
        name: "theta-check",
        summary: "terminal theta over the ensemble outside the strike band",
        claims: &["theta-terminal"],
    },
    Entry {
        experiment: Experiment::Increments,
        name: "increments",
        summary: "pre-move against post-move trade valuation and its compensator",
        claims: &["increment-comparison", "ex-ante-cross-term"],
    },
    Entry {
        experiment: Experiment::ExAnte,
        name: "ex-ante",
        summary: "nested one-step estimate of the expected residual and cross term",
        claims: &["ex-ante-cross-term", "discrete-residual"],
    },
    Entry {
        experiment: Experiment::Decompose,
        name: "decompose",
        summary: "kappa / lambda integrals and the theta defect under refinement",
        claims: &["kappa-lambda-split", "theta-integral"],
    },
    Entry {
        experiment: Experiment::A1Stats,
        name: "a1-stats",
        summary: "unconditional covariance chain of the split integrals",
        claims: &["unconditional-chain", "kappa-lambda-split"],
    },
    Entry {
        experiment: Experiment::A1Conditional,
        name: "a1-conditional",
        summary: "conditional correlation from restarted paths next to the unconditional one",
        claims: &["conditional-correlation", "unconditional-chain"],
    },
    Entry {
        experiment: Experiment::CrrConverge,
        name: "crr-converge",
        summary: "binomial convergence study with log-log slope",
        claims: &["lattice-convergence", "lattice-difference-equation"],
    },
    Entry {
        experiment: Experiment::BetaCheck,
        name: "beta-check",
        summary: "state-by-state beta ratios on difference-equation and bumped prices",
        claims: &["beta-relations", "lattice-difference-equation"],
    },
    Entry {
        experiment: Experiment::PhysicalPrice,
        name: "physical-price",
        summary: "physical-measure expected payoff, Monte Carlo check and option drift",
        claims: &["physical-expectation", "gbm-dynamics"],
    },
];

pub fn lookup(name: &str) -> Option<&'static Entry> {
    REGISTRY.iter().find(|e| e.name == name)
}

impl Experiment {
    pub fn entry(self) -> &'static Entry {
        REGISTRY.iter().find(|e| e.experiment == self).expect("every experiment is registered")
    }

    pub fn name(self) -> &'static str {
        self.entry().name
    }
}
