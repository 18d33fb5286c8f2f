use super::products::INNER_FUEL;
use super::witness::Witness;
use crate::error::Result;
use crate::kernel::{Point, Tape};
use crate::oracle::Search;
use crate::problems::{lazy_image, materialize, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Target solutions tried per sampled instance.
pub const SOLUTIONS_PER_SAMPLE: usize = 3;

/// Forward images are checked eagerly for convergence up to this many positions;
/// beyond it they are computed as the target verifier reads them.
pub const EAGER_PREFIX: u64 = 4096;

/// Outcome of one sampled instance.
#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub index: usize,
    pub verdict: Verdict,
    /// Target solutions pushed back through the witness.
    pub solutions: usize,
}

/// Aggregate over all samples of one witness.
#[derive(Debug, Clone)]
pub struct SoundnessReport {
    pub witness: String,
    pub horizon: u64,
    pub seed: u64,
    pub outcomes: Vec<SampleOutcome>,
}

impl SoundnessReport {
    pub fn passed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.verdict.is_pass()).count()
    }

    pub fn failed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.verdict.is_fail()).count()
    }

    pub fn inconclusive(&self) -> usize {
        self.outcomes.len() - self.passed() - self.failed()
    }

    /// Sound on this sample: no failures.
    pub fn sound(&self) -> bool {
        self.failed() == 0
    }

    pub fn first_failure(&self) -> Option<&SampleOutcome> {
        self.outcomes.iter().find(|o| o.verdict.is_fail())
    }
}

/// Push one source instance through `w` and judge every recovered solution.
pub fn check_sample(w: &Witness, inst: &Point, horizon: u64) -> Result<(Verdict, usize)> {
    let (src, tgt) = (&w.source, &w.target);
    let pre = src.check_instance(inst, horizon)?;
    if !pre.is_pass() {
        return Ok((Verdict::Inconclusive(format!("sampled source instance rejected: {}", pre.detail())), 0));
    }
    let th = (w.target_horizon)(horizon);
    let tape = w.forward_tape(Tape::Point(inst.clone()));
    let extent = tgt.extent(th);
    if let Err(why) = materialize(&tape, extent.min(EAGER_PREFIX), INNER_FUEL) {
        return Ok((Verdict::Fail(format!("forward image diverges: {why}")), 0));
    }
    let (fwd, fault) = lazy_image(&tape, INNER_FUEL);
    let valid = tgt.check_instance(&fwd, th)?;
    if valid.is_fail() {
        return Ok((Verdict::Fail(format!("forward image is not a {} instance: {}", tgt.name(), valid.detail())), 0));
    }
    let size = tgt.default_size() + w.size_slack;
    let sols = match tgt.solve(&fwd, th, size, SOLUTIONS_PER_SAMPLE)? {
        Search::Found { value, .. } => value,
        Search::Absent => return Ok((Verdict::Inconclusive(format!("no target solution of size {size} below {th}")), 0)),
        Search::Exhausted { nodes } => {
            return Ok((Verdict::Inconclusive(format!("target search stopped after {nodes} nodes")), 0))
        }
    };
    if let Some(why) = fault.lock().unwrap_or_else(|e| e.into_inner()).clone() {
        return Ok((Verdict::Fail(format!("forward image diverges: {why}")), 0));
    }
    let mut verdict = Verdict::Pass;
    for (k, sol) in sols.iter().enumerate() {
        let back = w.backward_tape(Tape::Point(inst.clone()), Tape::Point(sol.clone()));
        let v = match materialize(&back, src.solution_extent(horizon), INNER_FUEL) {
            Ok(b) => src.verify(inst, &b, horizon, src.default_size())?,
            Err(why) => Verdict::Fail(format!("backward image of solution {k} diverges: {why}")),
        };
        verdict = verdict.and(match v {
            Verdict::Fail(d) => Verdict::Fail(format!("solution {k}: {d}")),
            other => other,
        });
    }
    Ok((verdict, sols.len()))
}

/// The master property on `samples` seeded instances.
pub fn check_soundness(w: &Witness, samples: usize, horizon: u64, seed: u64) -> Result<SoundnessReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes = Vec::with_capacity(samples);
    for index in 0..samples {
        let inst = w.sample(&mut rng);
        let (verdict, solutions) = check_sample(w, &inst, horizon)?;
        outcomes.push(SampleOutcome { index, verdict, solutions });
    }
    Ok(SoundnessReport { witness: w.label.clone(), horizon, seed, outcomes })
}
