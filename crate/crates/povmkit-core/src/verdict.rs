//! Three-valued decision vocabulary shared by every relation query.
//!
//! Holds always carries a witness that revalidates independently (or sets
//! `witness_pending` when a rigorous criterion held but the numerical
//! synthesis stalled). Fails always carries the name of the exact rule that
//! certified impossibility. Unknown carries the best residual seen — a
//! numerical plateau is never presented as a proof.

use alloc::boxed::Box;

use crate::channel::Channel;
use crate::mat::Mat;
use crate::order::StochasticMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Holds,
    Fails,
    Unknown,
}

#[derive(Clone, Debug)]
pub enum Witness {
    /// Quantum pre-processing mapping one measurement onto the other.
    Channel(Channel),
    /// One channel per direction, for equivalence verdicts.
    ChannelPair(Box<Channel>, Box<Channel>),
    /// Classical post-processing table.
    Stochastic(StochasticMatrix),
    /// Unitary conjugation relating the two measurements.
    Unitary(Mat),
    /// Density matrix realizing a probability vector.
    State(Mat),
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub status: Status,
    pub witness: Option<Witness>,
    /// Name of the exact rule behind a rigorous verdict.
    pub certificate: Option<&'static str>,
    pub residual: Option<f64>,
    /// True when the verdict is rigorous but the solver could not synthesize
    /// the accompanying witness.
    pub witness_pending: bool,
}

impl Verdict {
    pub fn holds() -> Verdict {
        Verdict {
            status: Status::Holds,
            witness: None,
            certificate: None,
            residual: None,
            witness_pending: false,
        }
    }

    pub fn fails(certificate: &'static str) -> Verdict {
        Verdict {
            status: Status::Fails,
            witness: None,
            certificate: Some(certificate),
            residual: None,
            witness_pending: false,
        }
    }

    pub fn unknown(residual: f64) -> Verdict {
        Verdict {
            status: Status::Unknown,
            witness: None,
            certificate: None,
            residual: Some(residual),
            witness_pending: false,
        }
    }

    pub fn with_witness(mut self, w: Witness) -> Verdict {
        self.witness = Some(w);
        self
    }

    pub fn with_certificate(mut self, c: &'static str) -> Verdict {
        self.certificate = Some(c);
        self
    }

    pub fn with_residual(mut self, r: f64) -> Verdict {
        self.residual = Some(r);
        self
    }

    pub fn pending(mut self) -> Verdict {
        self.witness_pending = true;
        self
    }
}

/// Certificate names for rigorous verdicts. Each names the exact rule that
/// decided the query; reports carry these strings verbatim.
pub mod certs {
    /// The two measurements agree element-wise to machine precision, so
    /// the identity map witnesses the relation.
    pub const EXACT_EQUALITY: &str = "exact-equality";
    /// Two-outcome ordering decided by eigenvalue-interval inclusion.
    pub const EFFECT_INTERVAL_INCLUSION: &str = "effect-interval-inclusion";
    /// A per-element spectrum interval of the candidate target sticks out of
    /// the source's — necessary condition for ordering violated.
    pub const SPECTRUM_WIDTH_VIOLATION: &str = "spectrum-width-violation";
    /// Rank-one targets only arise from rank-one sources.
    pub const RANK_ONE_PRESERVATION: &str = "rank-one-preservation";
    /// Rank-one pairs in the ordering relation must match element traces.
    pub const RANK_ONE_TRACE_MISMATCH: &str = "rank-one-trace-mismatch";
    /// Informationally complete targets only arise from informationally
    /// complete sources.
    pub const INFOCOMPLETE_PRESERVATION: &str = "infocomplete-preservation";
    /// Extremal eigenvalues must agree elementwise under equivalence.
    pub const EIGENPROFILE_MISMATCH: &str = "eigenprofile-mismatch";
    /// Constructive connector from a measurement whose elements all have a
    /// unit eigenvalue.
    pub const UNIT_PEAK_CONSTRUCTION: &str = "unit-peak-construction";
    /// Farkas dual ray proves the post-processing LP infeasible.
    pub const LP_FARKAS: &str = "lp-farkas-certificate";
    /// Feasible process matrix found and revalidated.
    pub const CHOI_FEASIBILITY: &str = "choi-feasibility-witness";
    /// Exhaustive-start unitary search decides qubit equivalence.
    pub const QUBIT_UNITARY_SEARCH: &str = "qubit-unitary-search";
    /// Informationally complete sources pin the connecting map uniquely.
    pub const UNIQUE_TRANSFER_MAP: &str = "unique-transfer-map";
    /// One-sided domination of a rank-one family already closes the loop.
    pub const RANK_ONE_EQUIVALENCE: &str = "rank-one-equivalence";
    /// Range inclusion decided on the commuting family's vertex set.
    pub const ABELIAN_RANGE_VERTICES: &str = "abelian-range-vertices";
    /// A vertex of the target's range provably escapes the source's range.
    pub const RANGE_VERTEX_OUTSIDE: &str = "range-vertex-outside";
    /// The affine constraint system alone is inconsistent.
    pub const AFFINE_INCONSISTENCY: &str = "affine-inconsistency";
}
