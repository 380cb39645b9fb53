use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::nn::{Network, Tensor, Trace};
use crate::Result;

/// Which view a forward pass consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViewRole {
    Analysis,
    Descent,
    /// Unaugmented, normalized image.
    Plain,
}

/// What a forward pass was for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Per-sample losses fed to mixture fitting.
    LossFit,
    /// Predictions used for label refinement, co-guessing or bootstrapping targets.
    PseudoLabel,
    /// Small-loss or disagreement selection.
    Selection,
    /// Forward pass whose gradient updates parameters.
    Update,
    Evaluation,
}

const ROLES: [ViewRole; 3] = [ViewRole::Analysis, ViewRole::Descent, ViewRole::Plain];
const PURPOSES: [Purpose; 5] = [
    Purpose::LossFit,
    Purpose::PseudoLabel,
    Purpose::Selection,
    Purpose::Update,
    Purpose::Evaluation,
];

impl ViewRole {
    fn index(self) -> usize {
        self as usize
    }
}

impl Purpose {
    fn index(self) -> usize {
        self as usize
    }
}

/// True when `role` may feed `purpose` under the view-isolation contract: loss
/// fitting, pseudo-labels and selection never see descent views, and parameter
/// updates see nothing else.
pub fn allowed(role: ViewRole, purpose: Purpose) -> bool {
    match purpose {
        Purpose::Update => role == ViewRole::Descent,
        Purpose::LossFit | Purpose::PseudoLabel | Purpose::Selection => role != ViewRole::Descent,
        Purpose::Evaluation => true,
    }
}

/// Counts of samples pushed through the network per (role, purpose).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Audit {
    counts: [[u64; 5]; 3],
    violations: Vec<String>,
}

impl Audit {
    pub fn record(&mut self, role: ViewRole, purpose: Purpose, samples: usize) {
        self.counts[role.index()][purpose.index()] += samples as u64;
        if !allowed(role, purpose) && self.violations.len() < 32 {
            self.violations
                .push(format!("{samples} {role:?} samples used for {purpose:?}"));
        }
    }

    pub fn count(&self, role: ViewRole, purpose: Purpose) -> u64 {
        self.counts[role.index()][purpose.index()]
    }

    /// Samples recorded under a disallowed (role, purpose) pair.
    pub fn violation_count(&self) -> u64 {
        let mut n = 0;
        for r in ROLES {
            for p in PURPOSES {
                if !allowed(r, p) {
                    n += self.count(r, p);
                }
            }
        }
        n
    }

    /// The first few violations, for messages.
    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    pub fn merge(&mut self, other: &Audit) {
        for r in 0..3 {
            for p in 0..5 {
                self.counts[r][p] += other.counts[r][p];
            }
        }
        for v in &other.violations {
            if self.violations.len() < 32 {
                self.violations.push(v.clone());
            }
        }
    }
}

/// A batch of network inputs tagged with the view role they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewBatch {
    pub role: ViewRole,
    pub inputs: Tensor,
}

impl ViewBatch {
    pub fn new(role: ViewRole, inputs: Tensor) -> Self {
        Self { role, inputs }
    }

    pub fn len(&self) -> usize {
        self.inputs.batch_size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Forward pass recorded in `audit`.
pub fn audited_forward(net: &Network, batch: &ViewBatch, purpose: Purpose, audit: &mut Audit) -> Result<Tensor> {
    audit.record(batch.role, purpose, batch.len());
    net.forward(&batch.inputs)
}

/// Forward pass with activations kept for backprop, recorded as an update.
pub fn audited_trace(net: &Network, batch: &ViewBatch, audit: &mut Audit) -> Result<Trace> {
    audit.record(batch.role, Purpose::Update, batch.len());
    net.forward_trace(&batch.inputs)
}
