//! Bandlimited signals on `[0, 1)` and the sampling topologies that observe them.
//!
//! A signal with `M` harmonics is `p(t) = Σ_{k=-M..M} a_k e^{2πikt}`. Samples are
//! taken at sorted, distinct positions `t_q ∈ [0, 1)`. Gaps and preconditioning
//! weights use circular conventions: `t_0 = t_r - 1` and `t_{r+1} = 1 + t_1`.

use std::f64::consts::TAU;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Relative tolerance for accepting a coefficient vector as conjugate-symmetric.
const REAL_SYMMETRY_TOL: f64 = 1e-12;

/// `e^{2πi·x}` with the phase reduced modulo one before scaling, which keeps large
/// `k·t` products accurate.
#[inline]
pub(crate) fn unit_phasor(x: f64) -> Complex64 {
    let (s, c) = (TAU * x.fract()).sin_cos();
    Complex64::new(c, s)
}

fn check_position(t: f64) -> Result<()> {
    if (0.0..1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain(format!("position {t} is outside [0, 1)")))
    }
}

/// Finite Fourier series with harmonics `-M..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandlimitedSignal {
    harmonics: usize,
    /// `coeffs[j]` is `a_{j - M}`.
    coeffs: Vec<Complex64>,
    real: bool,
}

impl BandlimitedSignal {
    /// Builds a signal from `2M + 1` coefficients ordered `a_{-M}, ..., a_M`.
    ///
    /// With `real = true` the coefficients must satisfy `a_{-k} = conj(a_k)` up to
    /// rounding; they are then symmetrized exactly so that `p(t)` is real.
    pub fn new(coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "coefficient vector must have odd length 2M+1, got {}",
                coeffs.len()
            )));
        }
        let harmonics = coeffs.len() / 2;
        let mut coeffs = coeffs;
        if real {
            let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            for k in 0..=harmonics {
                let pos = coeffs[harmonics + k];
                let neg = coeffs[harmonics - k];
                if (neg - pos.conj()).norm() > REAL_SYMMETRY_TOL * scale {
                    return Err(Error::InvalidArgument(format!("real-valued signal requires a_-{k} = conj(a_{k})")));
                }
                let avg = (pos + neg.conj()) * 0.5;
                coeffs[harmonics + k] = avg;
                coeffs[harmonics - k] = avg.conj();
            }
            coeffs[harmonics].im = 0.0;
        }
        Ok(Self { harmonics, coeffs, real })
    }

    /// Real signal from `a_0` and the positive-frequency coefficients `a_1..a_M`.
    pub fn from_positive_harmonics(a0: f64, positive: &[Complex64]) -> Self {
        let m = positive.len();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
        coeffs[m] = Complex64::new(a0, 0.0);
        for (k, &a) in positive.iter().enumerate() {
            coeffs[m + k + 1] = a;
            coeffs[m - k - 1] = a.conj();
        }
        Self { harmonics: m, coeffs, real: true }
    }

    /// Random real signal with `M` harmonics; real and imaginary parts of each
    /// coefficient are uniform on `[-1, 1)`.
    pub fn random_real<R: Rng + ?Sized>(harmonics: usize, rng: &mut R) -> Self {
        let a0 = rng.random_range(-1.0..1.0);
        let positive: Vec<Complex64> =
            (0..harmonics).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        Self::from_positive_harmonics(a0, &positive)
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficients ordered `a_{-M}, ..., a_M`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `a_k`, zero outside the band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let m = self.harmonics as i64;
        if k.abs() > m {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + m) as usize]
        }
    }

    /// `p(t)` for `t ∈ [0, 1)`.
    pub fn evaluate(&self, t: f64) -> Result<Complex64> {
        check_position(t)?;
        Ok(self.evaluate_unchecked(t))
    }

    pub(crate) fn evaluate_unchecked(&self, t: f64) -> Complex64 {
        let m = self.harmonics as i64;
        self.coeffs.iter().zip(-m..=m).map(|(&a, k)| a * unit_phasor(k as f64 * t)).sum()
    }
}

/// Observed samples: sorted distinct positions in `[0, 1)` and the values there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    positions: Vec<f64>,
    values: Vec<Complex64>,
}

impl SampleSet {
    /// Sorts positions (carrying values along) and validates them.
    pub fn new(positions: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidArgument("sample set must not be empty".into()));
        }
        if positions.len() != values.len() {
            return Err(Error::InvalidArgument(format!("{} positions but {} values", positions.len(), values.len())));
        }
        for &t in &positions {
            check_position(t)?;
        }
        let mut pairs: Vec<(f64, Complex64)> = positions.into_iter().zip(values).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument(format!("duplicate sample position {}", w[0].0)));
        }
        let (positions, values) = pairs.into_iter().unzip();
        Ok(Self { positions, values })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Writes `t,value_re,value_im` rows at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,value_re,value_im")?;
        for (t, v) in self.positions.iter().zip(&self.values) {
            writeln!(out, "{t:.16e},{:.16e},{:.16e}", v.re, v.im)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`SampleSet::write_csv`]. Errors carry the
    /// 1-based line number of the offending row.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
        let expected = ["t", "value_re", "value_im"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "expected header t,value_re,value_im, found {}",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut positions = Vec::new();
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record
                .map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |i: usize| -> Result<f64> {
                let raw = record.get(i).unwrap_or("");
                raw.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("column {} is not a number: {raw:?}", expected[i]),
                })
            };
            let t = field(0)?;
            if !(0.0..1.0).contains(&t) {
                return Err(Error::Parse { line, message: format!("position {t} is outside [0, 1)") });
            }
            positions.push(t);
            values.push(Complex64::new(field(1)?, field(2)?));
        }
        Self::new(positions, values)
    }
}

/// Evaluates `signal` at every position. Positions need not be sorted.
pub fn sample_signal(signal: &BandlimitedSignal, positions: &[f64]) -> Result<SampleSet> {
    if positions.is_empty() {
        return Err(Error::InvalidArgument("no sample positions given".into()));
    }
    let values = positions.iter().map(|&t| signal.evaluate(t)).collect::<Result<Vec<_>>>()?;
    SampleSet::new(positions.to_vec(), values)
}

/// Half-open interval `[lo, hi) ⊆ [0, 1)` that sensors are deployed on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub const UNIT: Support = Support { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidArgument(format!("support [{lo}, {hi}) must satisfy 0 <= lo < hi <= 1")));
        }
        Ok(Self { lo, hi })
    }
}

impl Default for Support {
    fn default() -> Self {
        Self::UNIT
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

/// Parses `lo:hi`.
impl FromStr for Support {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("support {s:?} is not of the form lo:hi")))?;
        let parse = |x: &str| {
            x.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("support bound {x:?} is not a number")))
        };
        Support::new(parse(lo)?, parse(hi)?)
    }
}

/// `r` i.i.d. uniform positions on `support`, sorted ascending. Deterministic in `seed`.
pub fn random_topology(r: usize, support: Support, seed: u64) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::InvalidArgument("need at least one sample position".into()));
    }
    let support = Support::new(support.lo, support.hi)?;
    let mut rng = seed::rng(seed);
    let width = support.hi - support.lo;
    let mut positions: Vec<f64> = (0..r)
        .map(|_| {
            let t = support.lo + width * rng.random::<f64>();
            if t >= support.hi {
                support.hi.next_down()
            } else {
                t
            }
        })
        .collect();
    positions.sort_by(f64::total_cmp);
    Ok(positions)
}

/// Equally spaced positions `t_q = (q - 1)/r`.
pub fn regular_topology(r: usize) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::InvalidArgument("need at least one sample position".into()));
    }
    Ok((0..r).map(|q| q as f64 / r as f64).collect())
}

/// Maximum circular gap and the preconditioning weights of a topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub delta: f64,
    pub weights: Vec<f64>,
}

/// Circular gap profile of sorted positions in `[0, 1)`.
///
/// `delta = max_q (t_q - t_{q-1})` and `w_q = (t_{q+1} - t_{q-1})/2`, both with
/// wraparound, so the weights telescope to one.
pub fn gap_profile(positions: &[f64]) -> Result<GapProfile> {
    let r = positions.len();
    if r < 2 {
        return Err(Error::InvalidArgument(format!("gap profile needs at least 2 positions, got {r}")));
    }
    for &t in positions {
        check_position(t)?;
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("positions must be strictly increasing".into()));
    }
    let prev = |q: usize| if q == 0 { positions[r - 1] - 1.0 } else { positions[q - 1] };
    let next = |q: usize| if q == r - 1 { positions[0] + 1.0 } else { positions[q + 1] };
    let delta = (0..r).map(|q| positions[q] - prev(q)).fold(0.0, f64::max);
    let weights = (0..r).map(|q| 0.5 * (next(q) - prev(q))).collect();
    Ok(GapProfile { delta, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_signal() {
        let sig = BandlimitedSignal::new(vec![c(1.0, 0.0)], true).unwrap();
        for t in [0.0, 0.3, 0.999] {
            assert_eq!(sig.evaluate(t).unwrap(), c(1.0, 0.0));
        }
    }

    #[test]
    fn cosine_at_origin() {
        let sig = BandlimitedSignal::new(vec![c(0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0)], true).unwrap();
        let v = sig.evaluate(0.0).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn five_term_sum_matches_direct_summation() {
        let coeffs: Vec<Complex64> = (-2..=2).map(|k| c((k + 3) as f64 / 10.0, 0.0)).collect();
        let sig = BandlimitedSignal::new(coeffs.clone(), false).unwrap();
        let t = 0.3_f64;
        let mut expected = c(0.0, 0.0);
        for (j, a) in coeffs.iter().enumerate() {
            let k = j as f64 - 2.0;
            let arg = 2.0 * std::f64::consts::PI * k * t;
            expected += a * c(arg.cos(), arg.sin());
        }
        assert!((sig.evaluate(t).unwrap() - expected).norm() < 1e-14);
    }

    #[test]
    fn evaluate_rejects_out_of_range() {
        let sig = BandlimitedSignal::new(vec![c(1.0, 0.0)], true).unwrap();
        assert!(matches!(sig.evaluate(1.0), Err(Error::Domain(_))));
        assert!(matches!(sig.evaluate(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn real_flag_requires_conjugate_symmetry() {
        let bad = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)];
        assert!(BandlimitedSignal::new(bad, true).is_err());
        assert!(BandlimitedSignal::new(vec![c(1.0, 0.0); 2], false).is_err());
    }

    #[test]
    fn sampling_constant_and_single_exponential() {
        let sig = BandlimitedSignal::new(vec![c(3.0, 0.0)], true).unwrap();
        let s = sample_signal(&sig, &[0.0, 0.25, 0.5, 0.75]).unwrap();
        assert!(s.values().iter().all(|&v| v == c(3.0, 0.0)));

        let sig = BandlimitedSignal::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], false).unwrap();
        let s = sample_signal(&sig, &[0.5]).unwrap();
        assert!((s.values()[0] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sampling_sorts_and_rejects_bad_input() {
        let sig = BandlimitedSignal::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], false).unwrap();
        let s = sample_signal(&sig, &[0.5, 0.25]).unwrap();
        assert_eq!(s.positions(), &[0.25, 0.5]);
        assert!((s.values()[0] - c(0.0, 1.0)).norm() < 1e-15);
        assert!(matches!(sample_signal(&sig, &[]), Err(Error::InvalidArgument(_))));
        assert!(SampleSet::new(vec![0.1, 0.1], vec![c(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn fig1_setup_has_expected_shape() {
        let sig = BandlimitedSignal::random_real(10, &mut seed::rng(3));
        let pos = random_topology(26, Support::new(0.0, 0.8).unwrap(), 1).unwrap();
        let s = sample_signal(&sig, &pos).unwrap();
        assert_eq!(s.len(), 26);
        assert!(s.positions().iter().all(|&t| t < 0.8));
        assert!((21.0_f64 / 26.0 - 0.807).abs() < 1e-3);
    }

    #[test]
    fn topology_is_reproducible_and_uniform() {
        let a = random_topology(5, Support::UNIT, 42).unwrap();
        let b = random_topology(5, Support::UNIT, 42).unwrap();
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        assert!(a.windows(2).all(|w| w[0] <= w[1]));

        let big = random_topology(10_000, Support::UNIT, 9).unwrap();
        let mean = big.iter().sum::<f64>() / big.len() as f64;
        assert!((mean - 0.5).abs() < 0.02);
    }

    #[test]
    fn topology_rejects_bad_support() {
        assert!(random_topology(3, Support { lo: 0.5, hi: 0.5 }, 0).is_err());
        assert!(random_topology(3, Support { lo: -0.1, hi: 0.5 }, 0).is_err());
        assert!(random_topology(0, Support::UNIT, 0).is_err());
        assert!("0:0.8".parse::<Support>().is_ok());
        assert!("0.8".parse::<Support>().is_err());
    }

    #[test]
    fn uniform_grid_gap_profile() {
        let pos = regular_topology(8).unwrap();
        let g = gap_profile(&pos).unwrap();
        assert!((g.delta - 0.125).abs() < 1e-15);
        assert!(g.weights.iter().all(|&w| (w - 0.125).abs() < 1e-15));
    }

    #[test]
    fn wraparound_gap_profile() {
        let g = gap_profile(&[0.0, 0.1, 0.9]).unwrap();
        assert!((g.delta - 0.8).abs() < 1e-15);
        // w_1 = (0.1 - (0.9 - 1))/2, w_2 = (0.9 - 0)/2, w_3 = (1 + 0 - 0.1)/2
        let expected = [0.1, 0.45, 0.45];
        for (w, e) in g.weights.iter().zip(expected) {
            assert!((w - e).abs() < 1e-15);
        }
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(gap_profile(&[0.3]).is_err());
    }

    #[test]
    fn csv_round_trip_and_line_numbers() {
        let sig = BandlimitedSignal::random_real(3, &mut seed::rng(1));
        let pos = random_topology(7, Support::UNIT, 2).unwrap();
        let s = sample_signal(&sig, &pos).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = SampleSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);

        let bad = "t,value_re,value_im\n0.1,1,0\n0.2,abc,0\n";
        match SampleSet::read_csv(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(SampleSet::read_csv("x,y\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    proptest! {
        #[test]
        fn real_signals_evaluate_to_real(seed in any::<u64>(), m in 0usize..12) {
            let mut rng = seed::rng(seed);
            let sig = BandlimitedSignal::random_real(m, &mut rng);
            for _ in 0..100 {
                let t: f64 = rng.random();
                prop_assert!(sig.evaluate(t).unwrap().im.abs() < 1e-10);
            }
        }

        #[test]
        fn gap_weights_positive_and_sum_to_one(seed in any::<u64>(), r in 2usize..200) {
            let pos = random_topology(r, Support::UNIT, seed).unwrap();
            prop_assume!(pos.windows(2).all(|w| w[0] < w[1]));
            let g = gap_profile(&pos).unwrap();
            prop_assert!(g.weights.iter().all(|&w| w > 0.0));
            prop_assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(g.delta > 0.0 && g.delta <= 1.0);
        }
    }
}
