//! Timing and operation-count benchmarks over a grid of sizes.
//!
//! For an operation and size `n`:
//!
//! * `keygen`: a key over `n` attributes;
//! * `enc`: encryption under an `n`-leaf conjunction;
//! * `transform`: the proxy step for that ciphertext with a key holding all `n` leaves;
//! * `outdec`: the user step for the same.
//!
//! Each row records the wall-clock mean and standard deviation over the
//! repetitions and the operation count of one run. Counts are identical
//! across repetitions and must equal [`expected_count`].

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::time::Instant;

use rand_core::{CryptoRng, RngCore};
use vabe_core::abe::{keygen, setup, MasterSecret, PrivateKey, PublicParams};
use vabe_core::groups::{counted_scope, Gt, OpCounter};
use vabe_core::policy::LsssPolicy;
use vabe_core::vout::{encrypt, gen_tk, outdec, transform};

pub const DEFAULT_GRID: [usize; 6] = [1, 2, 5, 10, 20, 50];
pub const DEFAULT_REPS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operation {
    Keygen,
    Encrypt,
    Transform,
    Outdec,
}

impl Operation {
    pub const ALL: [Operation; 4] = [Operation::Keygen, Operation::Encrypt, Operation::Transform, Operation::Outdec];

    pub fn name(self) -> &'static str {
        match self {
            Operation::Keygen => "keygen",
            Operation::Encrypt => "enc",
            Operation::Transform => "transform",
            Operation::Outdec => "outdec",
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed-form operation counts at size `n`.
pub fn expected_count(op: Operation, n: usize) -> OpCounter {
    let n = n as u64;
    match op {
        Operation::Keygen => OpCounter { exp_g1: n, exp_g2: 2, hash_to_group: n, ..Default::default() },
        Operation::Encrypt => OpCounter {
            pairings: 0,
            exp_g1: 2 * (1 + 2 * n) + 2,
            exp_g2: 2 * n,
            exp_gt: 2,
            hash_to_group: 2 * n,
            hash_to_scalar: 2,
        },
        Operation::Transform => OpCounter { pairings: 2 * (2 * n + 1), exp_gt: 2 * n, ..Default::default() },
        Operation::Outdec => OpCounter { exp_g1: 2, exp_gt: 2, hash_to_scalar: 2, ..Default::default() },
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub operations: Vec<Operation>,
    pub grid: Vec<usize>,
    pub reps: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { operations: Operation::ALL.to_vec(), grid: DEFAULT_GRID.to_vec(), reps: DEFAULT_REPS }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub op: Operation,
    pub n: usize,
    pub reps: usize,
    /// Seconds.
    pub mean: f64,
    pub stddev: f64,
    pub counter: OpCounter,
}

impl BenchRow {
    pub fn matches_closed_form(&self) -> bool {
        self.counter == expected_count(self.op, self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    LinearFit { slope, intercept, r2 }
}

#[derive(Clone, Debug, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn rows_for(&self, op: Operation) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(move |r| r.op == op)
    }

    pub fn row(&self, op: Operation, n: usize) -> Option<&BenchRow> {
        self.rows_for(op).find(|r| r.n == n)
    }

    /// Fit of mean time against `n`; `None` with fewer than two sizes.
    pub fn fit(&self, op: Operation) -> Option<LinearFit> {
        let pts: Vec<(f64, f64)> = self.rows_for(op).map(|r| (r.n as f64, r.mean)).collect();
        (pts.len() >= 2).then(|| linear_fit(&pts))
    }

    pub fn mismatches(&self) -> Vec<&BenchRow> {
        self.rows.iter().filter(|r| !r.matches_closed_form()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "op,n,reps,mean_s,stddev_s,pairings,exp_g1,exp_g2,exp_gt,hash_to_group,hash_to_scalar\n",
        );
        for r in &self.rows {
            let c = &r.counter;
            writeln!(
                out,
                "{},{},{},{:.9},{:.9},{},{},{},{},{},{}",
                r.op, r.n, r.reps, r.mean, r.stddev, c.pairings, c.exp_g1, c.exp_g2, c.exp_gt, c.hash_to_group,
                c.hash_to_scalar
            )
            .unwrap();
        }
        out
    }
}

fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn attrs(n: usize) -> BTreeSet<String> {
    (0..n).map(|i| format!("attr{i}")).collect()
}

fn conjunction(n: usize) -> LsssPolicy {
    let text = (0..n).map(|i| format!("attr{i}")).collect::<Vec<_>>().join(" and ");
    LsssPolicy::from_text(&text).expect("generated policy is valid")
}

/// Times `body` `reps` times after one warm-up run.
fn measure(op: Operation, n: usize, reps: usize, mut body: impl FnMut()) -> BenchRow {
    let (_, counter) = counted_scope(&mut body);
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let (_, c) = counted_scope(&mut body);
        times.push(start.elapsed().as_secs_f64());
        assert_eq!(c, counter, "{op} n={n}: operation count varies between runs");
    }
    let (mean, stddev) = mean_stddev(&times);
    BenchRow { op, n, reps, mean, stddev, counter }
}

fn bench_one<R: RngCore + CryptoRng>(
    op: Operation,
    n: usize,
    reps: usize,
    pp: &PublicParams,
    msk: &MasterSecret,
    rng: &mut R,
) -> BenchRow {
    let attrs = attrs(n);
    let sk: PrivateKey = keygen(pp, msk, &attrs, rng).expect("n >= 1");
    let lsss = conjunction(n);
    let m = Gt::random(&mut *rng);
    match op {
        Operation::Keygen => measure(op, n, reps, || {
            keygen(pp, msk, &attrs, &mut *rng).unwrap();
        }),
        Operation::Encrypt => measure(op, n, reps, || {
            encrypt(pp, &m, &lsss, &mut *rng);
        }),
        Operation::Transform => {
            let (tk, _) = gen_tk(pp, &sk, rng);
            let ct = encrypt(pp, &m, &lsss, rng);
            measure(op, n, reps, || {
                transform(pp, &ct, &tk).unwrap();
            })
        }
        Operation::Outdec => {
            let (tk, rk) = gen_tk(pp, &sk, rng);
            let ct = encrypt(pp, &m, &lsss, rng);
            let ctp = transform(pp, &ct, &tk).unwrap();
            let header = ct.header();
            measure(op, n, reps, || {
                assert_eq!(outdec(pp, &header, &ctp, &rk).unwrap(), m);
            })
        }
    }
}

pub fn bench_run<R: RngCore + CryptoRng>(config: &BenchConfig, rng: &mut R) -> BenchReport {
    let (pp, msk) = setup(rng);
    let mut rows = Vec::new();
    for &op in &config.operations {
        for &n in &config.grid {
            rows.push(bench_one(op, n, config.reps.max(1), &pp, &msk, rng));
        }
    }
    BenchReport { rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_of_exact_line() {
        let f = linear_fit(&[(1.0, 3.0), (2.0, 5.0), (5.0, 11.0)]);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_of_noise_is_poor() {
        let f = linear_fit(&[(1.0, 1.0), (2.0, -1.0), (3.0, 1.0), (4.0, -1.0)]);
        assert!(f.r2 < 0.5);
    }

    #[test]
    fn sample_stddev() {
        let (m, s) = mean_stddev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - 2.138089935).abs() < 1e-6);
    }
}
