//! End-to-end unsupervised run: match, learn, block, evaluate.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::learner::{learn_scheme, LearnOutcome, LearnerConfig};
use crate::matcher::{exhaustive_mappings, generate_duplicates, run_matcher, DuplicateCandidate, MatchOutput, MatcherConfig};
use crate::runtime::{build_blocks, candidate_set_capped, evaluate, BlockStats, CandidateSet, EvalReport};
use crate::table::{Dataset, GroundTruth, MappingSet};

/// Where Q comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MappingSource {
    Matcher,
    User(MappingSet),
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    pub matcher: MatcherConfig,
    pub learner: LearnerConfig,
    /// Blocks with more records than this contribute no pairs.
    pub block_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    /// Present when the matcher produced Q.
    pub matched: Option<MatchOutput>,
    pub mappings: MappingSet,
    pub duplicates: Vec<DuplicateCandidate>,
    pub learned: LearnOutcome,
    pub gamma: CandidateSet,
    pub block_stats: BlockStats,
    pub eval: Option<EvalReport>,
    pub timings: Vec<StageTiming>,
}

fn timed<T>(timings: &mut Vec<StageTiming>, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    timings.push(StageTiming {
        stage: stage.into(),
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(out)
}

pub fn run_pipeline(
    r1: &Dataset,
    r2: &Dataset,
    truth: Option<&GroundTruth>,
    source: &MappingSource,
    params: &PipelineParams,
) -> Result<PipelineRun> {
    params.matcher.validate()?;
    params.learner.validate()?;
    let mut timings = Vec::new();
    let (matched, mappings, duplicates) = timed(&mut timings, "match", || match source {
        MappingSource::Matcher => {
            let out = run_matcher(r1, r2, &params.matcher)?;
            let mappings = out.mappings.clone();
            let dups = out.ranked.iter().take(params.matcher.n).cloned().collect();
            Ok((Some(out), mappings, dups))
        }
        MappingSource::User(q) => Ok((None, q.clone(), generate_duplicates(r1, r2, params.matcher.n)?)),
        MappingSource::Exhaustive => Ok((
            None,
            exhaustive_mappings(&r1.schema, &r2.schema),
            generate_duplicates(r1, r2, params.matcher.n)?,
        )),
    })?;
    let d: Vec<(String, String)> = duplicates
        .iter()
        .map(|c| (c.left_id.clone(), c.right_id.clone()))
        .collect();
    let learned = timed(&mut timings, "learn", || {
        learn_scheme(&d, &mappings, &params.learner, r1, r2, params.matcher.seed)
    })?;
    let (gamma, block_stats) = timed(&mut timings, "block", || {
        let index = build_blocks(&learned.scheme, r1, r2)?;
        Ok((candidate_set_capped(&index, params.block_cap), index.stats(params.block_cap)))
    })?;
    let eval = match truth {
        Some(t) => Some(timed(&mut timings, "evaluate", || evaluate(&gamma, t, r1.len(), r2.len()))?),
        None => None,
    };
    Ok(PipelineRun {
        matched,
        mappings,
        duplicates,
        learned,
        gamma,
        block_stats,
        eval,
        timings,
    })
}
