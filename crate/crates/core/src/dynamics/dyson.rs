//! Truncated-Dyson oracle for the interaction-picture expansion of the
//! transition probability.
//!
//! Each contribution U^(x) rho U^(y)^dag is evaluated by expanding the
//! coupling blocks in the A0/A1 eigenbases and integrating the nested phase
//! factors in closed form. Integrands are carried symbolically as sums of
//! c * s^m * e^{i mu s} terms, so resonant and degenerate phases (exponent
//! near zero over the whole integration range) are handled by an exact series
//! branch that produces the secular s, s^2/2, ... factors.

use num_complex::Complex64 as C64;

use super::DynamicsError;
use crate::linalg::{ComplexMatrix, DensityOperator};
use crate::model::{CouplingBlocks, ProbePureState};

/// Default cap on x + y.
pub const DYSON_ORDER_CAP: u32 = 4;

/// Below |freq * upper_limit| = this, nested integrals switch to the exact
/// series (degenerate/resonant) branch. The wide window keeps the closed-form
/// branch away from its catastrophic-cancellation regime.
const SERIES_BRANCH_THRESHOLD: f64 = 0.5;

const SERIES_TERMS: usize = 20;

/// One `coeff * s^power * e^{i freq s}` term.
#[derive(Debug, Clone, Copy)]
struct Term {
    coeff: C64,
    power: u32,
    freq: f64,
}

/// Integral of e^{i g s} from 0 to l, with a series branch near g l = 0 that
/// avoids the cancellation in (e^{i g l} - 1)/(i g).
pub fn phase_integral(g: f64, l: f64) -> C64 {
    let x = g * l;
    if x.abs() < SERIES_BRANCH_THRESHOLD {
        // l sum_p (i g l)^p / (p + 1)!
        let ix = C64::new(0.0, x);
        let mut acc = C64::new(0.0, 0.0);
        let mut term = C64::new(1.0, 0.0);
        for p in 0..SERIES_TERMS as u32 {
            acc += term / f64::from(p + 1);
            term = term * ix / f64::from(p + 1);
        }
        acc * l
    } else {
        (C64::from_polar(1.0, x) - 1.0) / C64::new(0.0, g)
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product::<f64>().max(1.0)
}

/// Integrate one term from 0 to the (symbolic) upper limit, returning terms
/// in the same representation. `l_total` is the largest upper limit that the
/// result will ever be evaluated at, which selects the branch.
fn integrate_term(t: Term, l_total: f64, out: &mut Vec<Term>) {
    let mu = t.freq;
    let m = t.power;
    if (mu * l_total).abs() < SERIES_BRANCH_THRESHOLD {
        // Exact limit branch: expand e^{i mu s} and integrate the polynomial.
        let imu = C64::new(0.0, mu);
        let mut pref = t.coeff;
        for p in 0..SERIES_TERMS as u32 {
            out.push(Term {
                coeff: pref / f64::from(m + p + 1),
                power: m + p + 1,
                freq: 0.0,
            });
            pref = pref * imu / f64::from(p + 1);
        }
    } else {
        // Integration by parts: antiderivative
        //   F(s) = e^{i mu s} sum_{p=0}^{m} (-1)^p m!/(m-p)! s^{m-p} / (i mu)^{p+1}
        // evaluated between 0 and the upper limit.
        let imu = C64::new(0.0, mu);
        let mut sign = 1.0;
        let mut denom = imu;
        for p in 0..=m {
            let fac = factorial(m) / factorial(m - p);
            out.push(Term { coeff: t.coeff * sign * fac / denom, power: m - p, freq: mu });
            sign = -sign;
            denom *= imu;
        }
        let boundary = if m % 2 == 0 { 1.0 } else { -1.0 };
        let denom_m1 = {
            let mut d = imu;
            for _ in 0..m {
                d *= imu;
            }
            d
        };
        out.push(Term {
            coeff: -t.coeff * boundary * factorial(m) / denom_m1,
            power: 0,
            freq: 0.0,
        });
    }
}

/// Coalesce terms sharing (power, freq); keeps list growth under control.
fn merge_terms(terms: &mut Vec<Term>) {
    terms.sort_by(|a, b| {
        a.power.cmp(&b.power).then(a.freq.partial_cmp(&b.freq).unwrap())
    });
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for &t in terms.iter() {
        match out.last_mut() {
            Some(last) if last.power == t.power && last.freq.to_bits() == t.freq.to_bits() => {
                last.coeff += t.coeff;
            }
            _ => out.push(t),
        }
    }
    *terms = out;
}

fn eval_terms(terms: &[Term], l: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for t in terms {
        acc += t.coeff * l.powi(t.power as i32) * C64::from_polar(1.0, t.freq * l);
    }
    acc
}

/// Matrix whose elements are symbolic term lists.
struct PolyMatrix {
    dim: usize,
    elems: Vec<Vec<Term>>,
}

impl PolyMatrix {
    fn identity(dim: usize) -> Self {
        let mut elems = vec![Vec::new(); dim * dim];
        for i in 0..dim {
            elems[i * dim + i].push(Term { coeff: C64::new(1.0, 0.0), power: 0, freq: 0.0 });
        }
        Self { dim, elems }
    }

    /// G'(v) = int_0^v M(s) . G(s) ds where M(s) has per-element phases
    /// e^{i freq[r][k] s} on top of constant coefficients.
    fn apply_and_integrate(&self, m: &ComplexMatrix, freq: &[f64], l_total: f64) -> Self {
        let d = self.dim;
        let mut elems = vec![Vec::new(); d * d];
        for r in 0..d {
            for l in 0..d {
                let mut combined: Vec<Term> = Vec::new();
                for k in 0..d {
                    let coeff = m[(r, k)];
                    if coeff.norm() == 0.0 {
                        continue;
                    }
                    let shift = freq[r * d + k];
                    for t in &self.elems[k * d + l] {
                        combined.push(Term {
                            coeff: coeff * t.coeff,
                            power: t.power,
                            freq: t.freq + shift,
                        });
                    }
                }
                merge_terms(&mut combined);
                let mut integrated = Vec::with_capacity(combined.len() * 3);
                for t in combined {
                    integrate_term(t, l_total, &mut integrated);
                }
                merge_terms(&mut integrated);
                elems[r * d + l] = integrated;
            }
        }
        Self { dim: d, elems }
    }

    fn evaluate(&self, l: f64) -> ComplexMatrix {
        let d = self.dim;
        ComplexMatrix::from_fn(d, d, |i, j| eval_terms(&self.elems[i * d + j], l))
    }
}

/// System-side chain operator for U^(steps) acting on probe state |pi_start>,
/// returned in the computational system basis.
fn chain_operator(
    blocks: &CouplingBlocks,
    lambda: f64,
    tau: f64,
    start: usize,
    steps: u32,
) -> Result<ComplexMatrix, DynamicsError> {
    let d = blocks.dim();
    if steps == 0 {
        return Ok(ComplexMatrix::identity(d));
    }
    let e0 = blocks.a0.eigen()?;
    let e1 = blocks.a1.eigen()?;
    let b_eig = e0.vectors.adjoint().matmul(&blocks.b).matmul(&e1.vectors);
    let b_eig_dag = b_eig.adjoint();
    let l_total = lambda * tau;

    // Frequencies carried by each factor, in units of the rescaled time s.
    let freq_up = |j: usize, k: usize| 1.0 + (e0.values[j] - e1.values[k]) / lambda;

    let mut freqs_b = vec![0.0; d * d]; // rows in A0 basis, cols in A1 basis
    let mut freqs_bdag = vec![0.0; d * d]; // rows in A1 basis, cols in A0 basis
    for j in 0..d {
        for k in 0..d {
            freqs_b[j * d + k] = freq_up(j, k);
            freqs_bdag[k * d + j] = -freq_up(j, k);
        }
    }

    let mut g = PolyMatrix::identity(d);
    // Apply factors right to left; factor t (1-indexed from the left) sees
    // the probe in state start ^ (steps - t), which selects B or B^dag.
    for t in (1..=steps).rev() {
        let incoming = (start as u32 + (steps - t)) % 2;
        g = if incoming == 1 {
            g.apply_and_integrate(&b_eig, &freqs_b, l_total)
        } else {
            g.apply_and_integrate(&b_eig_dag, &freqs_bdag, l_total)
        };
    }

    let o_eig = g.evaluate(l_total);
    let q = (start as u32 + steps) % 2;
    let w_row = if q == 0 { &e0.vectors } else { &e1.vectors };
    let w_col = if start == 0 { &e0.vectors } else { &e1.vectors };
    Ok(w_row.matmul(&o_eig).matmul(&w_col.adjoint()))
}

/// Contribution of the (x, y) Dyson pair to the transition probability:
///
/// ```text
/// (-i)^x (i)^y / lambda^(x+y)
///   tr[(|beta><beta| (x) I) e^{-i H0 lambda tau} U^(x) rho0 U^(y)dag e^{i H0 lambda tau}]
/// ```
///
/// Pairs satisfy `dyson_term(x, y) = conj(dyson_term(y, x))`, so summing a
/// triangle x + y <= r yields a real probability contribution.
pub fn dyson_term(
    blocks: &CouplingBlocks,
    rho_s: &DensityOperator,
    prep: &ProbePureState,
    meas: &ProbePureState,
    lambda: f64,
    tau: f64,
    x: u32,
    y: u32,
) -> Result<C64, DynamicsError> {
    dyson_term_with_cap(blocks, rho_s, prep, meas, lambda, tau, x, y, DYSON_ORDER_CAP)
}

#[allow(clippy::too_many_arguments)]
pub fn dyson_term_with_cap(
    blocks: &CouplingBlocks,
    rho_s: &DensityOperator,
    prep: &ProbePureState,
    meas: &ProbePureState,
    lambda: f64,
    tau: f64,
    x: u32,
    y: u32,
    cap: u32,
) -> Result<C64, DynamicsError> {
    if x + y > cap {
        return Err(DynamicsError::DysonCapExceeded { got: x + y, cap });
    }
    if blocks.dim() != rho_s.dim() {
        return Err(DynamicsError::DimensionMismatch(format!(
            "blocks dim {} vs rho dim {}",
            blocks.dim(),
            rho_s.dim()
        )));
    }

    let evol = [blocks.a0.evolution(tau)?, blocks.a1.evolution(tau)?];
    let evol_inv = [evol[0].adjoint(), evol[1].adjoint()];

    // (-i)^x (i)^y / lambda^(x+y)
    let mut global = C64::new(1.0, 0.0);
    for _ in 0..x {
        global *= C64::new(0.0, -1.0);
    }
    for _ in 0..y {
        global *= C64::new(0.0, 1.0);
    }
    global /= lambda.powi((x + y) as i32);

    let mut total = C64::new(0.0, 0.0);
    for n in 0..2usize {
        let cn = prep.c(n);
        if cn.norm() == 0.0 {
            continue;
        }
        let ox = chain_operator(blocks, lambda, tau, n, x)?;
        for m in 0..2usize {
            let cm = prep.c(m);
            if cm.norm() == 0.0 {
                continue;
            }
            let oy = chain_operator(blocks, lambda, tau, m, y)?;
            let p = (n as u32 + x) % 2;
            let r = (m as u32 + y) % 2;
            let bp = meas.c(p as usize).conj();
            let br = meas.c(r as usize);
            if bp.norm() == 0.0 || br.norm() == 0.0 {
                continue;
            }
            // e^{-i ((-1)^p - (-1)^r) lambda tau / 2}
            let sp = if p == 0 { 1.0 } else { -1.0 };
            let sr = if r == 0 { 1.0 } else { -1.0 };
            let probe_phase = C64::from_polar(1.0, -(sp - sr) * lambda * tau / 2.0);

            let middle = ox.matmul(rho_s.matrix()).matmul(&oy.adjoint());
            let sandwich = evol_inv[r as usize].matmul(&evol[p as usize]);
            let trace = sandwich.trace_prod(&middle);

            total += cn * cm.conj() * bp * br * probe_phase * trace;
        }
    }
    Ok(global * total)
}

/// Sum of all Dyson contributions with x + y <= max_order. Real up to
/// roundoff; the real part approximates the transition probability.
pub fn dyson_sum(
    blocks: &CouplingBlocks,
    rho_s: &DensityOperator,
    prep: &ProbePureState,
    meas: &ProbePureState,
    lambda: f64,
    tau: f64,
    max_order: u32,
) -> Result<f64, DynamicsError> {
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..=max_order {
        for x in 0..=r {
            let y = r - x;
            acc += dyson_term_with_cap(blocks, rho_s, prep, meas, lambda, tau, x, y, max_order)?;
        }
    }
    Ok(acc.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ProbeExperiment;
    use crate::linalg::HermitianOperator;
    use crate::model::control_eigenbasis;
    use num_complex::Complex64 as C64;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_blocks_and_rho(seed: u64, dim: usize) -> (CouplingBlocks, DensityOperator) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut rand_c =
            |s: f64| C64::new(rng.gen_range(-s..s), rng.gen_range(-s..s));
        let herm = |rng_c: &mut dyn FnMut(f64) -> C64, d: usize| {
            let m = ComplexMatrix::from_fn(d, d, |_, _| rng_c(1.0));
            m.add(&m.adjoint()).scale(C64::new(0.5, 0.0))
        };
        let a0 = HermitianOperator::new(herm(&mut rand_c, dim)).unwrap();
        let a1 = HermitianOperator::new(herm(&mut rand_c, dim)).unwrap();
        let b = ComplexMatrix::from_fn(dim, dim, |_, _| rand_c(1.0));
        let blocks = CouplingBlocks::new(a0, a1, b).unwrap();

        let g = ComplexMatrix::from_fn(dim, dim, |_, _| rand_c(1.0));
        let gram = g.matmul(&g.adjoint());
        let tr = gram.trace().re;
        let rho = DensityOperator::new(gram.scale(C64::new(1.0 / tr, 0.0))).unwrap();
        (blocks, rho)
    }

    fn experiment_from_blocks(
        blocks: &CouplingBlocks,
        rho: &DensityOperator,
        prep: ProbePureState,
        meas: ProbePureState,
    ) -> ProbeExperiment {
        let basis = control_eigenbasis(0.0, 0.0);
        ProbeExperiment {
            v_ps: blocks.assemble(&basis),
            rho_s: rho.clone(),
            theta: 0.0,
            phi: 0.0,
            preparation: prep,
            measurement: meas,
        }
    }

    #[test]
    fn phase_integral_accuracy() {
        // Both branches against a fine Simpson quadrature of e^{i g s}.
        for &(g, l) in &[(1e-4, 1.0), (0.3, 1.0), (0.49, 1.0), (0.51, 1.0), (2.0, 3.0)] {
            let n = 20_000usize;
            let h = l / n as f64;
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                let a = k as f64 * h;
                let f = |s: f64| C64::from_polar(1.0, g * s);
                acc += (f(a) + f(a + h) + f(a + 0.5 * h) * 4.0) * (h / 6.0);
            }
            let v = phase_integral(g, l);
            assert!((v - acc).norm() < 1e-10, "g={g}: {v} vs {acc}");
        }
        // Continuity across the branch threshold.
        let below = phase_integral(0.5 - 1e-9, 1.0);
        let above = phase_integral(0.5 + 1e-9, 1.0);
        assert!((below - above).norm() < 1e-9);
    }

    #[test]
    fn zeroth_order_projection() {
        let (blocks, rho) = random_blocks_and_rho(1, 3);
        let t = dyson_term(
            &blocks,
            &rho,
            &ProbePureState::pi0(),
            &ProbePureState::pi0(),
            5.0,
            0.8,
            0,
            0,
        )
        .unwrap();
        // alpha = beta = pi0: the zeroth-order term is exactly q = 1.
        assert!((t - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn conjugate_pair_symmetry() {
        let (blocks, rho) = random_blocks_and_rho(2, 3);
        let prep = ProbePureState::equator(0.3);
        let meas = ProbePureState::equator(1.1);
        for (x, y) in [(1u32, 0u32), (2, 0), (2, 1), (1, 1), (2, 2)] {
            let t_xy = dyson_term(&blocks, &rho, &prep, &meas, 7.0, 0.6, x, y).unwrap();
            let t_yx = dyson_term(&blocks, &rho, &prep, &meas, 7.0, 0.6, y, x).unwrap();
            assert!((t_xy - t_yx.conj()).norm() < 1e-12 * t_xy.norm().max(1e-3));
        }
    }

    /// Independent first-order formula: the commutator term evaluated through
    /// one explicitly integrated operator F = int_0^{lambda tau} e^{is} B~_s ds.
    fn first_order_closed_form(
        blocks: &CouplingBlocks,
        rho: &DensityOperator,
        prep: &ProbePureState,
        meas: &ProbePureState,
        lambda: f64,
        tau: f64,
    ) -> f64 {
        let e0 = blocks.a0.eigen().unwrap();
        let e1 = blocks.a1.eigen().unwrap();
        let d = blocks.dim();
        let b_eig = e0.vectors.adjoint().matmul(&blocks.b).matmul(&e1.vectors);
        let l = lambda * tau;
        let f_eig = ComplexMatrix::from_fn(d, d, |n, m| {
            let g = 1.0 + (e0.values[n] - e1.values[m]) / lambda;
            b_eig[(n, m)] * phase_integral(g, l)
        });
        let f = e0.vectors.matmul(&f_eig).matmul(&e1.vectors.adjoint());

        let ev0 = blocks.a0.evolution(tau).unwrap();
        let ev1 = blocks.a1.evolution(tau).unwrap();
        let rho_m = rho.matrix();

        let x0 = ev0.adjoint().matmul(&ev0.matmul(&f).matmul(rho_m)).trace();
        let x1 = ev1.adjoint().matmul(&ev1.matmul(rho_m).matmul(&f)).trace();
        let y1 = ev1.adjoint().matmul(&ev0.matmul(&f).matmul(rho_m)).trace();
        let y0 = ev1.adjoint().matmul(&ev0.matmul(rho_m).matmul(&f)).trace();

        let a0a1c = prep.c(0).conj() * prep.c(1); // a0 a1*
        let b0b1c = meas.c(0).conj() * meas.c(1); // b0 b1*
        let (b0n, b1n) = (meas.c(0).norm_sqr(), meas.c(1).norm_sqr());
        let (a0n, a1n) = (prep.c(0).norm_sqr(), prep.c(1).norm_sqr());

        let w = b0b1c
            * C64::from_polar(1.0, -lambda * tau)
            * (y1 * a1n - y0 * a0n);
        (2.0 / lambda) * ((a0a1c * x0).im * b0n - (a0a1c * x1).im * b1n + w.im)
    }

    #[test]
    fn first_order_matches_closed_form() {
        let (blocks, rho) = random_blocks_and_rho(3, 3);
        let raw = [C64::new(0.6, 0.2), C64::new(-0.5, 0.59)];
        let n = (raw[0].norm_sqr() + raw[1].norm_sqr()).sqrt();
        let prep = ProbePureState::new(raw[0] / n, raw[1] / n).unwrap();
        let meas = ProbePureState::equator(0.8);
        for &(lambda, tau) in &[(6.0, 0.7), (15.0, 1.3), (40.0, 0.25)] {
            let sum = dyson_term(&blocks, &rho, &prep, &meas, lambda, tau, 1, 0).unwrap()
                + dyson_term(&blocks, &rho, &prep, &meas, lambda, tau, 0, 1).unwrap();
            assert!(sum.im.abs() < 1e-10);
            let oracle = first_order_closed_form(&blocks, &rho, &prep, &meas, lambda, tau);
            assert!(
                (sum.re - oracle).abs() < 1e-9,
                "lambda {lambda}: dyson {} vs closed form {}",
                sum.re,
                oracle
            );
        }
    }

    #[test]
    fn dyson_sum_converges_to_exact_with_expected_power() {
        let (blocks, rho) = random_blocks_and_rho(8, 3);
        let tau = 0.6;

        // Generic preparation and measurement: clean power law for r = 0, 1.
        // From r = 2 on, generic states admit secular lambda-enhanced pieces
        // in the remainder (r = 3, 4 terms scale as kappa/lambda^2), so the
        // r + 1 power law for r = 2 is checked on the orthogonal control
        // basis pair, where those terms vanish by probe-parity.
        let prep = ProbePureState::equator(0.4);
        let meas = ProbePureState::new(C64::new(0.8, 0.0), C64::new(0.36, 0.48)).unwrap();
        let exp = experiment_from_blocks(&blocks, &rho, prep, meas);
        for (order, min_power) in [(0u32, 0.5), (1, 1.5)] {
            let slope = residual_slope(&exp, &blocks, &rho, &prep, &meas, tau, order);
            assert!(
                slope <= -min_power,
                "order {order}: residual decays with power {slope:.2}, need <= -{min_power}"
            );
        }

        let prep = ProbePureState::pi0();
        let meas = ProbePureState::pi1();
        let exp = experiment_from_blocks(&blocks, &rho, prep, meas);
        let slope = residual_slope(&exp, &blocks, &rho, &prep, &meas, tau, 2);
        assert!(slope <= -2.5, "order 2 basis pair: power {slope:.2}, need <= -2.5");
    }

    fn residual_slope(
        exp: &ProbeExperiment,
        blocks: &CouplingBlocks,
        rho: &DensityOperator,
        prep: &ProbePureState,
        meas: &ProbePureState,
        tau: f64,
        order: u32,
    ) -> f64 {
        let lambdas = crate::dynamics::logspace(30.0, 300.0, 7);
        let mut logs = Vec::new();
        for &l in &lambdas {
            let exact = exp.probability(l, tau).unwrap();
            let approx = dyson_sum(blocks, rho, prep, meas, l, tau, order).unwrap();
            let resid = (exact - approx).abs().max(1e-300);
            logs.push((l.ln(), resid.ln()));
        }
        fit_slope(&logs)
    }

    fn fit_slope(points: &[(f64, f64)]) -> f64 {
        let n = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }

    #[test]
    fn secular_terms_handled_at_resonance() {
        // Degenerate phases (g = 0) arise when lambda matches a gap between
        // A0 and A1 eigenvalues; the series branch must keep the integrals
        // finite and the conjugate-pair symmetry intact.
        let a0 = HermitianOperator::new(ComplexMatrix::diag_real(&[0.0, 2.0])).unwrap();
        let a1 = HermitianOperator::new(ComplexMatrix::diag_real(&[0.0, -1.0])).unwrap();
        let mut b = ComplexMatrix::zeros(2, 2);
        b[(0, 1)] = C64::new(0.7, 0.1);
        b[(1, 0)] = C64::new(-0.2, 0.4);
        let blocks = CouplingBlocks::new(a0, a1, b).unwrap();
        let rho = DensityOperator::maximally_mixed(2);
        // lambda = |E_1^0 - E_0^1| = 2 puts g = 1 + (E^0 - E^1)/lambda at 0
        // for the (1, 0) pair ... exponent -(1 + (2 - 0)/-2): pick lambda so
        // 1 + (E0_j - E1_k)/lambda = 0 => lambda = -(E0_j - E1_k) = -(0 - (-1)).
        let lambda = 1.0;
        let tau = 2.0;
        let t = dyson_term(
            &blocks,
            &rho,
            &ProbePureState::pi0(),
            &ProbePureState::pi1(),
            lambda,
            tau,
            1,
            1,
        )
        .unwrap();
        assert!(t.re.is_finite());
        let t20 = dyson_term(&blocks, &rho, &ProbePureState::pi0(), &ProbePureState::pi1(), lambda, tau, 2, 0)
            .unwrap();
        let t02 = dyson_term(&blocks, &rho, &ProbePureState::pi0(), &ProbePureState::pi1(), lambda, tau, 0, 2)
            .unwrap();
        assert!((t20 - t02.conj()).norm() < 1e-12);
    }

    #[test]
    fn cap_enforced() {
        let (blocks, rho) = random_blocks_and_rho(4, 2);
        let err = dyson_term(
            &blocks,
            &rho,
            &ProbePureState::pi0(),
            &ProbePureState::pi1(),
            5.0,
            0.5,
            3,
            2,
        )
        .unwrap_err();
        assert!(matches!(err, DynamicsError::DysonCapExceeded { got: 5, cap: 4 }));
    }
}
