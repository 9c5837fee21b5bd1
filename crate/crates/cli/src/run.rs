//! Job execution and on-disk artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use stc_core::channel::{
    db_to_linear, estimate_diversity, outage_curve_analytic, outage_prob_is, outage_prob_mc, rayleigh_exponents,
    simulate_pe, DblastTwoStream, FadingModel, OutageCurve,
};
use stc_core::constellation::*;
use stc_core::criteria::{abf_bound_check, check_mimo, check_miso, check_parallel, check_scalar, expurgate};
use stc_core::galois::{field_make, FieldMatrix};
use stc_core::rng::{rng_from_seed, RNG_NAME};
use stc_core::udm::*;
use stc_core::waterfill::{codebook_worst_report, solve_worst_channel};

use crate::config::*;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{stage}: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: stc_core::Error,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn stage<T>(name: &'static str, r: stc_core::Result<T>) -> Result<T, RunError> {
    r.map_err(|source| RunError::Core { stage: name, source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// Process exit code: 0 on pass, 2 on a failed criterion.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub job: &'static str,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub rng: &'static str,
    pub version: &'static str,
    pub status: Status,
    pub outputs: Vec<OutputFile>,
    pub summary: Value,
    pub created_unix: u64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

struct Writer<'a> {
    dir: &'a Path,
    header: String,
    outputs: Vec<OutputFile>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|source| RunError::Io { path, source })?;
        self.outputs.push(OutputFile {
            file: name.into(),
            sha256: sha256_hex(body.as_bytes()),
        });
        Ok(())
    }

    /// CSV with the provenance comment line first.
    fn csv(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let text = format!("{}{body}", self.header);
        self.write(name, &text)
    }
}

/// Permutation of `0..2^nbits`.
fn perm_of(spec: &PermSpec, nbits: u32) -> Result<DigitPermutation, RunError> {
    let p = match spec {
        PermSpec::Named(PermName::Identity) => DigitPermutation::identity(1 << nbits),
        PermSpec::Named(PermName::BitReversal) => bit_reversal_perm(nbits),
        PermSpec::Named(PermName::AltFlip) => alt_flip_reversal_perm(nbits),
        PermSpec::Explicit(p) => p.clone(),
    };
    if p.len() != 1 << nbits {
        return Err(RunError::Core {
            stage: "permutation",
            source: stc_core::Error::Invalid(format!("permutation of size {} on a {}-point rail", p.len(), 1 << nbits)),
        });
    }
    Ok(p)
}

fn half_bits(bits: u32) -> Result<u32, RunError> {
    if bits == 0 || bits % 2 != 0 {
        return Err(RunError::Core {
            stage: "construct",
            source: stc_core::Error::Invalid(format!("QAM bits {bits} must be even and positive")),
        });
    }
    Ok(bits / 2)
}

pub fn build_udm(spec: &UdmSpec) -> Result<UdmFamily, RunError> {
    let s = "build UDM family";
    match spec {
        UdmSpec::IdentityPair { n } => stage(s, build_identity_pair(*n)),
        UdmSpec::Tensor { n } => stage(s, build_tensor_t(*n)),
        UdmSpec::L4F3 { n } => stage(s, build_l4_f3(*n)),
        UdmSpec::Pascal { n, l, p, m } => {
            let f = stage(s, field_make(*p, *m))?;
            stage(s, build_pascal(*n, *l, &f))
        }
        UdmSpec::RsMds { n, l, p, m } => {
            let f = stage(s, field_make(*p, *m))?;
            stage(s, build_rs_mds(*n, *l, &f)).map(|(_, fam)| fam)
        }
        UdmSpec::Custom { p, m, matrices } => {
            let f = stage(s, field_make(*p, *m))?;
            let mats = matrices
                .iter()
                .map(|rows| stage(s, FieldMatrix::from_rows(&f, rows)))
                .collect::<Result<Vec<_>, _>>()?;
            stage(s, UdmFamily::new(&f, mats, Provenance::Custom))
        }
    }
}

pub fn build_family(spec: &FamilySpec, seed: Option<u64>) -> Result<Codebook, RunError> {
    let s = "construct family";
    let code = match spec {
        FamilySpec::Qam { bits } => stage(s, make_qam(*bits))?,
        FamilySpec::RectQam { bits } => stage(s, make_rect_qam(*bits))?,
        FamilySpec::SquareQam { per_rail } => stage(s, make_square_qam(*per_rail))?,
        FamilySpec::RotatedQam { bits } => stage(s, rotated_qam_codebook(*bits))?,
        FamilySpec::Alamouti { bits } => stage(s, make_qam(*bits).and_then(|q| alamouti_codebook(&q)))?,
        FamilySpec::Vblast { nt, bits_per_antenna } => stage(s, vblast_codebook(*nt, *bits_per_antenna))?,
        FamilySpec::Permutation { branches, bits, perms } => {
            let nb = half_bits(*bits)?;
            let perms = perms.iter().map(|p| perm_of(p, nb)).collect::<Result<Vec<_>, _>>()?;
            let pam = stage(s, PamSpec::binary(nb))?;
            stage(s, permutation_codebook(*branches, *bits, &perms, &pam))?
        }
        FamilySpec::RandomPermutation { branches, bits, draws } => {
            let seed = seed.expect("validated: stochastic families carry a seed");
            let mut rng = rng_from_seed(seed);
            let (code, _) = stage(s, random_permutation_search(*branches, *bits, *draws, &mut rng))?;
            code.with_seed(seed)
        }
        FamilySpec::Udm { family, gap } => {
            let fam = build_udm(family)?;
            let pam = stage(s, PamSpec::new(fam.field().order(), fam.n() as u32, *gap))?;
            stage(s, udm_codebook(&fam, &pam))?
        }
        FamilySpec::QamPermutation { bits, perms } => {
            let perms = perms.iter().map(|p| perm_of(p, *bits)).collect::<Result<Vec<_>, _>>()?;
            stage(s, qam_permutation_codebook(*bits, &perms))?
        }
        FamilySpec::DiagonalMiso { stream } => {
            let stream = build_family(stream, seed)?;
            stage(s, diagonal_miso_codebook(&stream))?
        }
        FamilySpec::Dblast { bits_per_rail, perm } => {
            let d = stage(s, DblastTwoStream::new(*bits_per_rail, perm_of(perm, *bits_per_rail)?))?;
            d.codebook().clone()
        }
        FamilySpec::Timespace { bits_per_rail, perm } => {
            let d = stage(s, DblastTwoStream::new(*bits_per_rail, perm_of(perm, *bits_per_rail)?))?;
            stage(s, timespace_codebook(2, d.stream()))?
        }
        FamilySpec::Expurgated { base } => {
            let code = build_family(base, seed)?;
            stage("expurgate", expurgate(&code))?
        }
    };
    Ok(code)
}

/// Analytic tradeoff curve where the model determines one.
fn model_curve(model: &FadingModel) -> Option<OutageCurve> {
    let exps = match model {
        FadingModel::IidRayleigh { nt, nr } => rayleigh_exponents(*nt, *nr),
        FadingModel::DegenerateMiso { nt, nr, zeroed } => {
            let live = (0..*nt).filter(|a| !zeroed.contains(a)).count();
            if live == 0 {
                return None;
            }
            rayleigh_exponents(live, *nr)
        }
        FadingModel::Isotropic { exponents, .. } => exponents.clone(),
        FadingModel::Fixed { .. } => return None,
    };
    outage_curve_analytic(&exps).ok()
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), RunError> {
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|source| RunError::Io { path, source })
}

/// Run one job, writing its CSV/JSON outputs and a manifest into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Manifest, RunError> {
    fs::create_dir_all(out_dir).map_err(|source| RunError::Io { path: out_dir.into(), source })?;
    let hash = config.hash();
    let seed = config.seed();
    let seed_text = seed.map_or("none".to_string(), |s| s.to_string());
    let mut w = Writer {
        dir: out_dir,
        header: format!("# config_hash: {hash} seed: {seed_text} rng: {RNG_NAME}\n"),
        outputs: Vec::new(),
    };
    w.write("config.json", &(config.to_canonical() + "\n"))?;

    let (status, summary) = match config {
        ExperimentConfig::Construct(ConstructJob { family, seed }) => {
            let code = build_family(family, *seed)?;
            w.write("codebook.json", &stage("serialize codebook", code.to_json())?)?;
            let mut csv = String::from("index,energy\n");
            for (i, e) in code.energies().iter().enumerate() {
                csv.push_str(&format!("{i},{e:e}\n"));
            }
            w.csv("codebook.csv", &csv)?;
            let ok = code.power_ok(1e-9);
            let summary = json!({
                "family": code.family, "size": code.len(), "nt": code.nt, "T": code.t,
                "rate": code.rate, "mean_energy": code.mean_energy(), "power_ok": ok,
            });
            (Status::from_pass(ok), summary)
        }
        ExperimentConfig::Verify(VerifyJob { target, criterion, rate, c, nr, seed }) => match target {
            VerifyTarget::Abf { nbits } => {
                let r = stage("alternate-flip bound", abf_bound_check(*nbits))?;
                let csv = format!(
                    "nbits,min_unnormalized,min_normalized,bound,pair_i,pair_j,pass\n{},{},{:e},{:e},{},{},{}\n",
                    r.nbits, r.min_unnormalized, r.min_normalized, r.bound, r.pair.0, r.pair.1, r.pass
                );
                w.csv("verify.csv", &csv)?;
                (Status::from_pass(r.pass), serde_json::to_value(&r).expect("report serializes"))
            }
            VerifyTarget::Udm(spec) => {
                let fam = build_udm(spec)?;
                let verdict = udm_verify(&fam);
                w.csv("verify.csv", &udm_csv(&fam, &verdict))?;
                (Status::from_pass(verdict.passed()), udm_summary(&fam, &verdict))
            }
            VerifyTarget::Codebook(family) => {
                let code = build_family(family, *seed)?;
                let rate = rate.unwrap_or(code.rate);
                let s = "universality check";
                let r = match criterion.expect("validated: codebook targets name a criterion") {
                    Criterion::Scalar => stage(s, check_scalar(&code, rate, *c))?,
                    Criterion::Parallel => stage(s, check_parallel(&code, rate, *c))?,
                    Criterion::Miso => stage(s, check_miso(&code, rate, *c))?,
                    Criterion::Mimo => stage(s, check_mimo(&code, rate, *nr, *c))?,
                };
                let csv = format!(
                    "family,criterion,rate,c,min_value,threshold,pair_i,pair_j,pass\n{},{},{:e},{:e},{:e},{:e},{},{},{}\n",
                    code.family,
                    serde_json::to_value(r.kind).expect("kind").as_str().unwrap_or(""),
                    r.rate,
                    r.c,
                    r.min_value,
                    r.threshold,
                    r.pair.0,
                    r.pair.1,
                    r.pass
                );
                w.csv("verify.csv", &csv)?;
                (Status::from_pass(r.pass), serde_json::to_value(&r).expect("report serializes"))
            }
        },
        ExperimentConfig::Waterfill(WaterfillJob { family, instances, rate, snr, nr, seed }) => {
            if let Some(family) = family {
                let code = build_family(family, *seed)?;
                let rate = rate.unwrap_or(code.rate);
                let r = stage("worst-case waterfilling", codebook_worst_report(&code, rate, *nr))?;
                w.csv("waterfill.csv", &r.to_csv())?;
                let summary = json!({"rate": rate, "min_criterion": r.min_criterion, "pair": r.pair});
                (Status::Pass, summary)
            } else {
                let rate = rate.expect("validated: instances carry a rate");
                let mut csv = String::from("instance,singular_values,k,lambda,water_level,criterion,pairwise_error\n");
                let mut min = f64::INFINITY;
                for (i, sv) in instances.as_deref().unwrap_or_default().iter().enumerate() {
                    let wc = stage("worst-case waterfilling", solve_worst_channel(sv, rate, *snr))?;
                    let svs: Vec<String> = sv.iter().map(|x| format!("{x:e}")).collect();
                    csv.push_str(&format!(
                        "{i},{},{},{:e},{:e},{:e},{:e}\n",
                        svs.join(";"),
                        wc.k,
                        wc.lambda,
                        wc.water_level,
                        wc.criterion,
                        wc.pairwise_error
                    ));
                    min = min.min(wc.criterion);
                }
                w.csv("waterfill.csv", &csv)?;
                (Status::Pass, json!({"rate": rate, "min_criterion": min}))
            }
        }
        ExperimentConfig::Udm(UdmJob { family, exhaustive }) => {
            if let Some(spec) = family {
                let fam = build_udm(spec)?;
                let verdict = udm_verify(&fam);
                w.write("udm.json", &stage("serialize UDM family", fam.to_json())?)?;
                w.csv("udm.csv", &udm_csv(&fam, &verdict))?;
                (Status::from_pass(verdict.passed()), udm_summary(&fam, &verdict))
            } else {
                let e = exhaustive.expect("validated: one of family and exhaustive");
                let f = stage("exhaustive UDM search", field_make(e.p, e.m))?;
                let found = stage("exhaustive UDM search", exhaustive_udm_search(&f, e.n, e.l))?;
                if let Some(mats) = &found {
                    let fam = stage("exhaustive UDM search", UdmFamily::new(&f, mats.clone(), Provenance::Custom))?;
                    w.write("udm.json", &stage("serialize UDM family", fam.to_json())?)?;
                }
                w.csv("udm.csv", &format!("q,n,L,found\n{},{},{},{}\n", f.order(), e.n, e.l, found.is_some()))?;
                (Status::Pass, json!({"q": f.order(), "n": e.n, "L": e.l, "found": found.is_some()}))
            }
        }
        ExperimentConfig::Outage(OutageJob { model, gains, snr_db, trials, method, seed }) => {
            stage("fading model", model.validate())?;
            let curve = model_curve(model);
            if let Some(c) = &curve {
                w.csv("curve.csv", &c.to_csv())?;
            }
            let mut points = Vec::new();
            if *trials > 0 {
                let seed = seed.expect("validated: Monte Carlo outage carries a seed");
                let mut csv = String::from("gain,snr_db,rate,p,half_width,trials,events\n");
                let mut k = 0u64;
                for &g in gains {
                    for &db in snr_db {
                        let snr = db_to_linear(db);
                        let rate = g * snr.log2();
                        // each point has its own stream family
                        let point_seed = seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                        k += 1;
                        let est = match (method, model) {
                            (OutageMethod::Is, FadingModel::IidRayleigh { nt, nr }) => {
                                stage("outage estimate", outage_prob_is(*nt, *nr, rate, snr, *trials, point_seed))?
                            }
                            (OutageMethod::Is, _) => {
                                return Err(RunError::Core {
                                    stage: "outage estimate",
                                    source: stc_core::Error::Invalid("importance sampling needs iid Rayleigh".into()),
                                })
                            }
                            (OutageMethod::Mc, _) => {
                                stage("outage estimate", outage_prob_mc(model, rate, snr, *trials, point_seed))?
                            }
                        };
                        csv.push_str(&format!(
                            "{g:e},{db:e},{rate:e},{:e},{:e},{},{}\n",
                            est.p, est.half_width, est.trials, est.events
                        ));
                        points.push(est);
                    }
                }
                w.csv("outage.csv", &csv)?;
            }
            let summary = json!({
                "breakpoints": curve.as_ref().map(|c| c.breakpoints.clone()),
                "points": points.len(),
            });
            (Status::Pass, summary)
        }
        ExperimentConfig::Simulate(SimulateJob { family, model, snr_db, trials, seed, unit_average, expect_slope }) => {
            let seed = seed.expect("validated: simulate carries a seed");
            let mut code = build_family(family, Some(seed))?;
            if *unit_average {
                code = code.to_unit_average();
            }
            let sim = stage("simulate", simulate_pe(&code, model, snr_db, *trials, seed))?;
            w.csv("pe.csv", &sim.to_csv())?;
            let fit = estimate_diversity(&sim).ok();
            let pass = match (expect_slope, &fit) {
                (None, _) => true,
                (Some(e), Some(f)) => (f.slope - e.value).abs() <= e.tol,
                (Some(_), None) => false,
            };
            let summary = json!({
                "family": code.family, "rate": code.rate,
                "slope": fit.as_ref().map(|f| f.slope),
                "slope_stderr": fit.as_ref().map(|f| f.stderr),
                "fit_points": fit.as_ref().map(|f| f.points),
            });
            (Status::from_pass(pass), summary)
        }
    };

    let manifest = Manifest {
        job: config.job_name(),
        config_hash: hash,
        seed,
        rng: RNG_NAME,
        version: env!("CARGO_PKG_VERSION"),
        status,
        outputs: w.outputs,
        summary,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    write_manifest(out_dir, &manifest)?;
    Ok(manifest)
}

fn udm_csv(fam: &UdmFamily, verdict: &UdmVerdict) -> String {
    let counter = match verdict {
        UdmVerdict::Pass => String::new(),
        UdmVerdict::Fail(k) => k.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
    };
    format!(
        "q,n,L,provenance,pass,counterexample\n{},{},{},{},{},{}\n",
        fam.field().order(),
        fam.n(),
        fam.l(),
        serde_json::to_value(fam.provenance()).expect("provenance").as_str().unwrap_or(""),
        verdict.passed(),
        counter
    )
}

fn udm_summary(fam: &UdmFamily, verdict: &UdmVerdict) -> Value {
    json!({
        "q": fam.field().order(), "n": fam.n(), "L": fam.l(),
        "pass": verdict.passed(),
        "counterexample": match verdict { UdmVerdict::Fail(k) => Some(k.clone()), UdmVerdict::Pass => None },
    })
}
