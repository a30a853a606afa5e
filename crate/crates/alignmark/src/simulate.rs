//! Monte-Carlo alignment experiment: embed a mark, add Gaussian noise,
//! detect by crosscorrelation and aggregate deviation and misalignment
//! statistics across SNR levels.
//!
//! The mark is expanded by an integer factor, centered in a zero background
//! and correlated with its noise-free version over every displacement that
//! keeps the reference fully inside the background. Each trial draws from an
//! independent counter-based RNG stream, and all aggregation is integer
//! arithmetic, so results are bit-identical for a fixed seed at any thread
//! count. Detection uses an integral image over the noisy data, so each
//! correlation value costs one window lookup per mark pixel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::RealImage;
use crate::error::{Error, Result};
use crate::matrix::BinaryMatrix;

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub mark: BinaryMatrix,
    /// Pixels per mark cell.
    pub expansion_k: usize,
    /// Background side = factor x expanded mark side.
    pub background_factor: usize,
    pub snr_db_grid: Vec<f64>,
    /// Trials per SNR level.
    pub trials: usize,
    /// Root RNG seed; trial t at SNR index i uses stream (i << 32) | t.
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub threads: usize,
}

impl TrialConfig {
    pub fn new(mark: BinaryMatrix) -> Self {
        Self {
            mark,
            expansion_k: 1,
            background_factor: 5,
            snr_db_grid: vec![0.0],
            trials: 1000,
            seed: 0,
            threads: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.expansion_k == 0 || self.background_factor == 0 {
            return Err(Error::InvalidArgument(
                "expansion factor and background factor must be >= 1".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("need at least one trial".into()));
        }
        if self.mark.popcount() == 0 {
            return Err(Error::InvalidArgument(
                "mark has no pattern pixels".into(),
            ));
        }
        Ok(())
    }
}

/// Signal amplitude is fixed at 1, so sigma = 10^(-snr_db / 20).
pub fn noise_sigma(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

/// Outcome of a single detection trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Signed horizontal (column) peak displacement from the true position.
    pub dx: i64,
    /// Signed vertical (row) displacement.
    pub dy: i64,
    pub misaligned: bool,
    /// Number of equal-maxima cells in the trial's correlation.
    pub tie_count: usize,
}

/// Per-SNR aggregate statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrStats {
    pub snr_db: f64,
    pub rms_dx: f64,
    pub rms_dy: f64,
    pub mean_abs_dx: f64,
    pub mean_abs_dy: f64,
    pub misalign_rate: f64,
    pub misalign_stderr: f64,
    pub trials: usize,
}

impl SnrStats {
    pub const CSV_HEADER: &'static str =
        "snr_db,rms_dx,rms_dy,mean_abs_dx,mean_abs_dy,misalign_rate,misalign_stderr,trials";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.snr_db,
            self.rms_dx,
            self.rms_dy,
            self.mean_abs_dx,
            self.mean_abs_dy,
            self.misalign_rate,
            self.misalign_stderr,
            self.trials
        )
    }
}

pub fn stats_to_csv(stats: &[SnrStats]) -> String {
    let mut out = String::from(SnrStats::CSV_HEADER);
    out.push('\n');
    for s in stats {
        out.push_str(&s.csv_row());
        out.push('\n');
    }
    out
}

/// Expanded mark centered in a zero background; returns the image and the
/// ground-truth (row, col) placement of the mark's top-left corner. The
/// centering offset rounds toward the origin when exact centering is
/// impossible.
pub fn embed(
    mark: &BinaryMatrix,
    expansion_k: usize,
    background_factor: usize,
) -> Result<(RealImage, (usize, usize))> {
    if expansion_k == 0 || background_factor == 0 {
        return Err(Error::InvalidArgument(
            "expansion factor and background factor must be >= 1".into(),
        ));
    }
    let (em, en) = (
        mark.row_count() * expansion_k,
        mark.col_count() * expansion_k,
    );
    let (h, w) = (em * background_factor, en * background_factor);
    let mut img = RealImage::zeros(h, w)?;
    let truth = ((h - em) / 2, (w - en) / 2);
    for i in 0..em {
        for j in 0..en {
            if mark.get(i / expansion_k, j / expansion_k) == 1 {
                *img.get_mut(truth.0 + i, truth.1 + j) = 1.0;
            }
        }
    }
    Ok((img, truth))
}

/// Noise-free expanded reference with precomputed pattern-cell list, ready
/// for repeated detection against same-size noisy images.
pub struct ExpandedReference {
    expansion_k: usize,
    rows: usize,
    cols: usize,
    /// (row, col) of mark cells holding a 1, in the unexpanded mark.
    ones: Vec<(usize, usize)>,
    truth: (usize, usize),
    height: usize,
    width: usize,
}

impl ExpandedReference {
    pub fn new(mark: &BinaryMatrix, expansion_k: usize, background_factor: usize) -> Result<Self> {
        if mark.popcount() == 0 {
            return Err(Error::InvalidArgument("mark has no pattern pixels".into()));
        }
        let (_, truth) = embed(mark, expansion_k, background_factor)?;
        let mut ones = Vec::new();
        for i in 0..mark.row_count() {
            for j in 0..mark.col_count() {
                if mark.get(i, j) == 1 {
                    ones.push((i, j));
                }
            }
        }
        let em = mark.row_count() * expansion_k;
        let en = mark.col_count() * expansion_k;
        Ok(Self {
            expansion_k,
            rows: em,
            cols: en,
            ones,
            truth,
            height: em * background_factor,
            width: en * background_factor,
        })
    }

    pub fn truth(&self) -> (usize, usize) {
        self.truth
    }
}

/// Reusable per-thread scratch buffers for detection.
#[derive(Default)]
pub struct DetectScratch {
    integral: Vec<f64>,
    window: Vec<f64>,
}

/// Crosscorrelate the reference against a noisy image over all placements
/// keeping the reference fully inside, pick the global maximum (uniformly at
/// random among ties, consuming the trial's RNG stream) and report the
/// displacement from the true position.
pub fn detect<R: Rng>(
    reference: &ExpandedReference,
    image: &RealImage,
    scratch: &mut DetectScratch,
    rng: &mut R,
) -> TrialOutcome {
    let (h, w) = (image.height(), image.width());
    assert_eq!((h, w), (reference.height, reference.width));
    let k = reference.expansion_k;

    // integral image, (h+1) x (w+1)
    let iw = w + 1;
    scratch.integral.clear();
    scratch.integral.resize((h + 1) * iw, 0.0);
    let integral = &mut scratch.integral;
    for i in 0..h {
        let mut row_sum = 0.0;
        for j in 0..w {
            row_sum += image.get(i, j);
            integral[(i + 1) * iw + j + 1] = integral[i * iw + j + 1] + row_sum;
        }
    }

    // k x k window sums at every top-left corner
    let (wh, ww) = (h - k + 1, w - k + 1);
    scratch.window.clear();
    scratch.window.resize(wh * ww, 0.0);
    let window = &mut scratch.window;
    for i in 0..wh {
        for j in 0..ww {
            window[i * ww + j] = integral[(i + k) * iw + j + k]
                - integral[i * iw + j + k]
                - integral[(i + k) * iw + j]
                + integral[i * iw + j];
        }
    }

    // single pass over all fully-inside placements, tracking the tied maxima
    let (sh, sw) = (h - reference.rows, w - reference.cols);
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<(usize, usize)> = Vec::new();
    for y in 0..=sh {
        for x in 0..=sw {
            let mut c = 0.0;
            for &(a, b) in &reference.ones {
                c += window[(y + a * k) * ww + (x + b * k)];
            }
            if c > best {
                best = c;
                ties.clear();
                ties.push((y, x));
            } else if c == best {
                ties.push((y, x));
            }
        }
    }
    let pick = if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..ties.len())]
    };
    let dy = pick.0 as i64 - reference.truth.0 as i64;
    let dx = pick.1 as i64 - reference.truth.1 as i64;
    TrialOutcome {
        dx,
        dy,
        misaligned: (dx, dy) != (0, 0),
        tie_count: ties.len(),
    }
}

fn trial_rng(seed: u64, snr_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 32) | trial as u64);
    rng
}

fn run_trial(
    reference: &ExpandedReference,
    clean: &RealImage,
    sigma: f64,
    scratch: &mut (DetectScratch, RealImage),
    rng: &mut ChaCha8Rng,
) -> TrialOutcome {
    let (scratch, noisy) = scratch;
    noisy.pixels_mut().copy_from_slice(clean.pixels());
    if sigma > 0.0 {
        for px in noisy.pixels_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *px += sigma * z;
        }
    }
    detect(reference, noisy, scratch, rng)
}

fn aggregate(snr_db: f64, outcomes: &[TrialOutcome]) -> SnrStats {
    let t = outcomes.len() as f64;
    let sum_dx2: i128 = outcomes.iter().map(|o| (o.dx * o.dx) as i128).sum();
    let sum_dy2: i128 = outcomes.iter().map(|o| (o.dy * o.dy) as i128).sum();
    let sum_abs_dx: i128 = outcomes.iter().map(|o| o.dx.unsigned_abs() as i128).sum();
    let sum_abs_dy: i128 = outcomes.iter().map(|o| o.dy.unsigned_abs() as i128).sum();
    let misaligns = outcomes.iter().filter(|o| o.misaligned).count();
    let rate = misaligns as f64 / t;
    SnrStats {
        snr_db,
        rms_dx: (sum_dx2 as f64 / t).sqrt(),
        rms_dy: (sum_dy2 as f64 / t).sqrt(),
        mean_abs_dx: sum_abs_dx as f64 / t,
        mean_abs_dy: sum_abs_dy as f64 / t,
        misalign_rate: rate,
        misalign_stderr: (rate * (1.0 - rate) / t).sqrt(),
        trials: outcomes.len(),
    }
}

/// Run the full SNR sweep. Deterministic for a fixed config and seed.
pub fn run_sweep(config: &TrialConfig) -> Result<Vec<SnrStats>> {
    config.validate()?;
    let reference =
        ExpandedReference::new(&config.mark, config.expansion_k, config.background_factor)?;
    let (clean, _) = embed(&config.mark, config.expansion_k, config.background_factor)?;

    let sweep = || -> Vec<SnrStats> {
        config
            .snr_db_grid
            .iter()
            .enumerate()
            .map(|(si, &snr_db)| {
                let sigma = noise_sigma(snr_db);
                let outcomes: Vec<TrialOutcome> = (0..config.trials)
                    .into_par_iter()
                    .map_init(
                        || (DetectScratch::default(), clean.clone()),
                        |scratch, t| {
                            let mut rng = trial_rng(config.seed, si, t);
                            run_trial(&reference, &clean, sigma, scratch, &mut rng)
                        },
                    )
                    .collect();
                aggregate(snr_db, &outcomes)
            })
            .collect()
    };

    if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(pool.install(sweep))
    } else {
        Ok(sweep())
    }
}

/// Monte-Carlo estimate of the misalignment probability at one SNR level:
/// fraction of trials with nonzero displacement, with binomial standard
/// error. Uses expansion 1 and background factor 5.
pub fn estimate_misalignment_probability(
    mark: &BinaryMatrix,
    snr_db: f64,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials < 100 {
        return Err(Error::InvalidArgument(
            "misalignment estimation needs at least 100 trials".into(),
        ));
    }
    let mut config = TrialConfig::new(mark.clone());
    config.snr_db_grid = vec![snr_db];
    config.trials = trials;
    config.seed = seed;
    let stats = run_sweep(&config)?;
    Ok((stats[0].misalign_rate, stats[0].misalign_stderr))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> BinaryMatrix {
        s.parse().unwrap()
    }

    #[test]
    fn embed_single_pixel() {
        let (img, truth) = embed(&parse("1\n"), 1, 3).unwrap();
        assert_eq!((img.height(), img.width()), (3, 3));
        assert_eq!(truth, (1, 1));
        assert_eq!(img.get(1, 1), 1.0);
        assert_eq!(img.pixels().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn embed_equal_area_expansions() {
        let (img5, _) = embed(&parse("10101\n01010\n10101\n01010\n10101\n"), 14, 5).unwrap();
        assert_eq!((img5.height(), img5.width()), (350, 350));
        let seven = "1000001\n0100010\n0010100\n0001000\n0010100\n0100010\n1000001\n";
        let (img7, _) = embed(&parse(seven), 10, 5).unwrap();
        assert_eq!((img7.height(), img7.width()), (350, 350));
    }

    #[test]
    fn zero_noise_never_misaligns() {
        let mark = parse("010\n111\n010\n");
        let mut config = TrialConfig::new(mark);
        config.expansion_k = 2;
        config.snr_db_grid = vec![f64::INFINITY];
        config.trials = 50;
        let stats = run_sweep(&config).unwrap();
        assert_eq!(stats[0].misalign_rate, 0.0);
        assert_eq!(stats[0].rms_dx, 0.0);
        assert_eq!(stats[0].rms_dy, 0.0);
    }

    #[test]
    fn noise_free_detection_is_exact() {
        let mark = parse("110\n011\n010\n");
        let reference = ExpandedReference::new(&mark, 2, 5).unwrap();
        let (img, _) = embed(&mark, 2, 5).unwrap();
        let mut rng = trial_rng(7, 0, 0);
        let out = detect(&reference, &img, &mut DetectScratch::default(), &mut rng);
        assert_eq!((out.dx, out.dy, out.tie_count), (0, 0, 1));
        assert!(!out.misaligned);
    }

    #[test]
    fn constant_image_ties_everywhere() {
        let mark = parse("11\n11\n");
        let reference = ExpandedReference::new(&mark, 1, 3).unwrap();
        let img = RealImage::new(6, 6, vec![0.5; 36]).unwrap();
        let mut rng = trial_rng(3, 0, 0);
        let out = detect(&reference, &img, &mut DetectScratch::default(), &mut rng);
        assert_eq!(out.tie_count, 5 * 5);
    }

    #[test]
    fn affine_rescaled_image_gives_identical_outcome() {
        let mark = parse("010\n111\n010\n");
        let reference = ExpandedReference::new(&mark, 2, 5).unwrap();
        let (clean, _) = embed(&mark, 2, 5).unwrap();
        for trial in 0..20 {
            let mut noisy = clean.clone();
            let mut rng = trial_rng(11, 0, trial);
            for px in noisy.pixels_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *px += 0.8 * z;
            }
            // powers of two keep the scaling exact in floating point
            let scaled = noisy.affine(4.0, 0.0);
            let mut rng_a = trial_rng(12, 1, trial);
            let mut rng_b = trial_rng(12, 1, trial);
            let a = detect(&reference, &noisy, &mut DetectScratch::default(), &mut rng_a);
            let b = detect(&reference, &scaled, &mut DetectScratch::default(), &mut rng_b);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sweep_is_deterministic_across_thread_counts() {
        let mark = parse("10101\n01010\n10101\n01010\n10101\n");
        let mut config = TrialConfig::new(mark);
        config.expansion_k = 2;
        config.snr_db_grid = vec![2.0, 6.0];
        config.trials = 64;
        config.seed = 42;
        config.threads = 1;
        let a = run_sweep(&config).unwrap();
        config.threads = 4;
        let b = run_sweep(&config).unwrap();
        assert_eq!(stats_to_csv(&a), stats_to_csv(&b));
    }

    #[test]
    fn estimator_rejects_too_few_trials() {
        let mark = parse("11\n11\n");
        assert!(estimate_misalignment_probability(&mark, 6.0, 50, 1).is_err());
    }

    #[test]
    fn degenerate_config_rejected() {
        let mark = parse("00\n00\n");
        let config = TrialConfig::new(mark);
        assert!(run_sweep(&config).is_err());
    }
}
