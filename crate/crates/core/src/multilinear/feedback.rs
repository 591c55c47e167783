//! Feedback around a linear system with named ports.
//!
//! The system `T` maps the concatenated input ports to the concatenated output
//! ports. Feeding output port `i` back into input port `j` gives the loop
//! equation `ξ = L ξ + B u` with `L = T[i, j]` and `B` the block of `T` from the
//! remaining inputs to port `i`. The loop is well posed when `I − L` is
//! invertible; `‖L‖ < 1` is sufficient but not required.

use serde::{Deserialize, Serialize};

use super::{profile_mismatch, Field, MultilinearError, MultilinearVectorMap, Result};
use crate::linalg::{
    self, singular_values, solve_matrix, spectral_norm, ComplexMatrix, DimProfile, SolveMode,
};

pub const PICARD_STEPS: usize = 200;

/// Floor on the smallest singular value of `I − L`.
pub const ILL_POSED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackProblem {
    pub system: MultilinearVectorMap,
    pub input_ports: Vec<usize>,
    pub output_ports: Vec<usize>,
    pub feed_from: usize,
    pub feed_into: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackSolution {
    /// Map from the remaining inputs to the loop signal ξ.
    pub loop_signal: MultilinearVectorMap,
    pub loop_gain: f64,
    pub contractive: bool,
    pub min_singular_value: f64,
    /// Max entry gap to the Picard iterate, computed when the loop contracts.
    pub picard_gap: Option<f64>,
    /// `‖ξ − (Lξ + B)‖` entrywise.
    pub fixed_point_residual: f64,
}

fn offsets(ports: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    ports
        .iter()
        .map(|&p| {
            let o = acc;
            acc += p;
            o
        })
        .collect()
}

impl FeedbackProblem {
    pub fn new(system: MultilinearVectorMap, input_ports: Vec<usize>, output_ports: Vec<usize>, feed_from: usize, feed_into: usize) -> Result<Self> {
        let p = Self {
            system,
            input_ports,
            output_ports,
            feed_from,
            feed_into,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.system.arity() != 1 {
            return Err(profile_mismatch("feedback system must be a linear (unary) map"));
        }
        if self.input_ports.iter().sum::<usize>() != self.system.input_dims()[0]
            || self.output_ports.iter().sum::<usize>() != self.system.output_dim()
            || self.input_ports.contains(&0)
            || self.output_ports.contains(&0)
        {
            return Err(profile_mismatch("ports do not partition the system dimensions"));
        }
        let (Some(&from), Some(&into)) = (self.output_ports.get(self.feed_from), self.input_ports.get(self.feed_into)) else {
            return Err(profile_mismatch("feedback port index out of range"));
        };
        if from != into {
            return Err(profile_mismatch(format!("feeding a {from}-dim output into a {into}-dim input")));
        }
        if self.input_ports.len() < 2 {
            return Err(profile_mismatch("feedback leaves no external input"));
        }
        Ok(())
    }

    /// Scalar loop `ξ = g·ξ + h·u`.
    pub fn scalar(g: f64, h: f64) -> Result<Self> {
        let m = ComplexMatrix::from_real_rows(&[&[h, g]]);
        let sys = MultilinearVectorMap::new(DimProfile::new(vec![2])?, 1, Field::Real, m)?;
        Self::new(sys, vec![1, 1], vec![1], 0, 1)
    }

    /// Loop with gain matrix `L` and input matrix `B`: `T = [B, L]`.
    pub fn from_blocks(l: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self> {
        if !l.is_square() || b.rows() != l.rows() {
            return Err(profile_mismatch("loop blocks have incompatible shapes"));
        }
        let d = l.rows();
        let mut t = ComplexMatrix::zeros(d, b.cols() + d);
        t.set_block(0, 0, b);
        t.set_block(0, b.cols(), l);
        let field = if l.is_real() && b.is_real() { Field::Real } else { Field::Complex };
        let sys = MultilinearVectorMap::new(DimProfile::new(vec![b.cols() + d])?, d, field, t)?;
        Self::new(sys, vec![b.cols(), d], vec![d], 0, 1)
    }

    /// Negative interconnection `e = u − H_i y`, `y = H_j e`, with the loop
    /// signal `y`: `T = [H_j, −H_j·H_i]`.
    pub fn negative_interconnection(h_i: &ComplexMatrix, h_j: &ComplexMatrix) -> Result<Self> {
        let l = -&h_j.matmul(h_i)?;
        Self::from_blocks(&l, h_j)
    }

    fn in_offsets(&self) -> Vec<usize> {
        offsets(&self.input_ports)
    }

    fn out_offsets(&self) -> Vec<usize> {
        offsets(&self.output_ports)
    }

    fn block(&self, out_port: usize, in_port: usize) -> ComplexMatrix {
        let (ro, co) = (self.out_offsets()[out_port], self.in_offsets()[in_port]);
        self.system
            .matrix()
            .block(ro, co, self.output_ports[out_port], self.input_ports[in_port])
    }

    /// Columns of `T` for every input port except `feed_into`, restricted to
    /// the rows of `out_port`.
    fn external_block(&self, out_port: usize) -> ComplexMatrix {
        let parts: Vec<ComplexMatrix> = (0..self.input_ports.len())
            .filter(|&p| p != self.feed_into)
            .map(|p| self.block(out_port, p))
            .collect();
        hcat(&parts)
    }

    pub fn loop_operator(&self) -> ComplexMatrix {
        self.block(self.feed_from, self.feed_into)
    }

    pub fn loop_gain(&self) -> f64 {
        spectral_norm(&self.loop_operator())
    }

    pub fn is_contractive(&self) -> bool {
        self.loop_gain() < 1.0
    }

    fn external_dims(&self) -> usize {
        self.input_ports.iter().sum::<usize>() - self.input_ports[self.feed_into]
    }

    /// Solves `(I − L) X = B` directly.
    pub fn solve(&self) -> Result<FeedbackSolution> {
        self.validate()?;
        let l = self.loop_operator();
        let b = self.external_block(self.feed_from);
        let d = l.rows();
        let i_minus_l = &ComplexMatrix::identity(d) - &l;
        let min_sv = singular_values(&i_minus_l).last().copied().unwrap_or(0.0);
        if min_sv < ILL_POSED_TOL {
            return Err(MultilinearError::IllPosedFeedback { min_sv });
        }
        let x = solve_matrix(&i_minus_l, &b, SolveMode::Exact).map_err(|e| match e {
            linalg::LinalgError::Singular { min_sv, .. } => MultilinearError::IllPosedFeedback { min_sv },
            other => other.into(),
        })?;
        let loop_gain = spectral_norm(&l);
        let contractive = loop_gain < 1.0;
        let picard_gap = contractive.then(|| self.picard(PICARD_STEPS).max_abs_diff(&x));
        let fixed_point_residual = self.fixed_point_residual(&x);
        let field = self.system.field();
        let loop_signal = MultilinearVectorMap::new(DimProfile::new(vec![self.external_dims()])?, d, field, x)?;
        Ok(FeedbackSolution {
            loop_signal,
            loop_gain,
            contractive,
            min_singular_value: min_sv,
            picard_gap,
            fixed_point_residual,
        })
    }

    /// `X_{k+1} = L X_k + B` from `X_0 = 0`.
    pub fn picard(&self, steps: usize) -> ComplexMatrix {
        let l = self.loop_operator();
        let b = self.external_block(self.feed_from);
        let mut x = ComplexMatrix::zeros(b.rows(), b.cols());
        for _ in 0..steps {
            x = &(&l * &x) + &b;
        }
        x
    }

    pub fn fixed_point_residual(&self, x: &ComplexMatrix) -> f64 {
        let l = self.loop_operator();
        let b = self.external_block(self.feed_from);
        x.max_abs_diff(&(&(&l * x) + &b))
    }

    /// Map from the remaining inputs to the remaining outputs once the loop is
    /// closed, or `None` when every output feeds back.
    pub fn closed_loop(&self, sol: &FeedbackSolution) -> Result<Option<MultilinearVectorMap>> {
        let rest: Vec<usize> = (0..self.output_ports.len()).filter(|&p| p != self.feed_from).collect();
        if rest.is_empty() {
            return Ok(None);
        }
        let rows: Vec<ComplexMatrix> = rest
            .iter()
            .map(|&p| {
                let direct = self.external_block(p);
                let through = self.block(p, self.feed_into);
                &direct + &(&through * sol.loop_signal.matrix())
            })
            .collect();
        let m = vcat(&rows);
        let out = m.rows();
        Ok(Some(MultilinearVectorMap::new(
            DimProfile::new(vec![self.external_dims()])?,
            out,
            self.system.field().join(sol.loop_signal.field()),
            m,
        )?))
    }
}

fn hcat(parts: &[ComplexMatrix]) -> ComplexMatrix {
    let rows = parts[0].rows();
    let cols = parts.iter().map(ComplexMatrix::cols).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut c = 0;
    for p in parts {
        out.set_block(0, c, p);
        c += p.cols();
    }
    out
}

fn vcat(parts: &[ComplexMatrix]) -> ComplexMatrix {
    let cols = parts[0].cols();
    let rows = parts.iter().map(ComplexMatrix::rows).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut r = 0;
    for p in parts {
        out.set_block(r, 0, p);
        r += p.rows();
    }
    out
}
