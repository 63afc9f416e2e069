//! Command-line front end: argument parsing, the `search`, `verify` and
//! `paper-suite` pipelines, JSON output and the JSON-lines results store.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::Ring;
use crate::counting::{genuineness_test, trace_table_with, Genuineness, TraceTable};
use crate::curve::{frac_to_triple, GenusTwoCurve};
use crate::error::{Error, Result};
use crate::galois;
use crate::livne::{self, LivneConfig, Modulus, RayClassGroup, TraceSource};
use crate::newform::{self, NewformRecord};
use crate::quadfield::{self, split_prime, PrimeIdeal, QuadElement, QuadField, QuadFrac};
use crate::shimura;

pub const DEFAULT_TRACE_BOUND: u64 = 3000;
pub const DEFAULT_SQUARE_CHECK_BOUND: u64 = 500;
pub const DEFAULT_HEIGHT: i64 = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "qmsurf", version, about = "QM abelian surfaces over imaginary quadratic fields")]
pub struct Cli {
    /// LMFDB field label, e.g. 2.0.3.1
    #[arg(long, global = true)]
    pub field: Option<String>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Never touch the network.
    #[arg(long, global = true)]
    pub offline: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Points on the Shimura conics.
    #[command(subcommand)]
    Conic(ConicCommand),
    /// Members of the discriminant-6 family.
    #[command(subcommand)]
    Family(FamilyCommand),
    /// Trace table of a curve.
    Analyze {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRACE_BOUND)]
        max_norm: u64,
        #[arg(long, default_value_t = DEFAULT_SQUARE_CHECK_BOUND)]
        square_check_norm: u64,
    },
    /// Look for a conjugate pair of split primes with `a^2 != a'^2`.
    Genuine {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRACE_BOUND)]
        max_norm: u64,
    },
    CycleTypes {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRACE_BOUND)]
        max_norm: u64,
    },
    /// Unit group of a maximal order modulo ℓ and the ℓ-adic local model.
    GroupTheory {
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        precision: Option<u32>,
    },
    /// Ray class group for a modulus `gen^e,gen^e,...`.
    Rcg {
        #[arg(long)]
        modulus: String,
    },
    #[command(subcommand)]
    Newform(NewformCommand),
    #[command(subcommand)]
    Livne(LivneCommand),
    /// Trace table, genuineness, residual isomorphism and trace comparison.
    Verify(VerifyArgs),
    /// Run the pipeline on the four bundled curves and newforms.
    PaperSuite {
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TRACE_BOUND)]
        max_norm: u64,
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Sweep the discriminant-6 conic for family members with restricted bad reduction.
    Search {
        #[arg(long, default_value_t = DEFAULT_HEIGHT)]
        height: i64,
        /// Rational primes allowed below potentially bad primes, e.g. `5,37`.
        #[arg(long, default_value = "")]
        allowed: String,
        #[arg(long)]
        store: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConicCommand {
    Points {
        #[arg(long)]
        disc: u32,
        #[arg(long, default_value_t = DEFAULT_HEIGHT)]
        height: i64,
    },
}

#[derive(Debug, Subcommand)]
pub enum FamilyCommand {
    /// Emit the curve `C_j`.
    Curve {
        #[arg(long, allow_hyphen_values = true)]
        j: String,
    },
    /// Recover `j` from a curve file.
    Match {
        #[arg(long)]
        curve: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum NewformCommand {
    Show {
        #[arg(long)]
        file: PathBuf,
    },
    Fetch {
        #[arg(long)]
        label: String,
        #[arg(long, default_value = "cache")]
        cache_dir: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum LivneCommand {
    Verify {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        newform: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRACE_BOUND)]
        max_norm: u64,
        #[arg(long, allow_hyphen_values = true)]
        twist_prime: Option<String>,
    },
}

#[derive(Clone, Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long)]
    pub newform: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TRACE_BOUND)]
    pub max_norm: u64,
    #[arg(long, default_value_t = DEFAULT_SQUARE_CHECK_BOUND)]
    pub square_check_norm: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub twist_prime: Option<String>,
    /// Ray class modulus for the residual stage; derived from the level when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub modulus: Option<String>,
    /// Primes spanning the quadratic characters, `gen;gen;...`.
    #[arg(long, allow_hyphen_values = true)]
    pub span: Option<String>,
    /// Separating primes for the cubic characters, `gen;gen;...`.
    #[arg(long, allow_hyphen_values = true)]
    pub separating: Option<String>,
    #[arg(long)]
    pub store: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub field: Option<QuadField>,
    pub trace_bound: u64,
    pub square_check_bound: u64,
    pub height: i64,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub offline: bool,
    pub twist_prime: Option<PrimeIdeal>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            field: None,
            trace_bound: DEFAULT_TRACE_BOUND,
            square_check_bound: DEFAULT_SQUARE_CHECK_BOUND,
            height: DEFAULT_HEIGHT,
            jobs: 1,
            out: None,
            offline: false,
            twist_prime: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trace_bound == 0 || self.height <= 0 || self.jobs == 0 {
            return Err(Error::InvalidConfig("bounds and job count must be positive".into()));
        }
        Ok(())
    }

    pub fn require_field(&self) -> Result<QuadField> {
        self.field.ok_or_else(|| Error::InvalidConfig("--field is required".into()))
    }

    fn parallel(&self) -> bool {
        self.jobs > 1
    }
}

/// Exit status for an error: 1 when a mathematical check failed, 2 for bad input.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_verification_failure() {
        1
    } else {
        2
    }
}

/// One analysis record in the JSON-lines results store.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreRecord {
    pub curve_hash: String,
    pub field: String,
    pub j: Option<String>,
    pub disc_support: Vec<String>,
    pub genuineness: Option<String>,
    pub verification: Option<String>,
    pub timestamp: u64,
}

pub struct ResultsStore {
    path: PathBuf,
}

impl ResultsStore {
    pub fn open(path: impl Into<PathBuf>) -> Self {
        ResultsStore { path: path.into() }
    }

    pub fn append(&self, record: &StoreRecord) -> Result<()> {
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        writeln!(f, "{}", serde_json::to_string(record)?)?;
        Ok(())
    }

    pub fn read_all(&self) -> Result<Vec<StoreRecord>> {
        if !self.path.exists() {
            return Ok(Vec::new());
        }
        fs::read_to_string(&self.path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect()
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn read_curve(path: &Path) -> Result<GenusTwoCurve> {
    GenusTwoCurve::from_json(&fs::read_to_string(path)?)
}

fn parse_prime(field: QuadField, text: &str) -> Result<PrimeIdeal> {
    let x = quadfield::parse_element(field, text.trim())?;
    if !x.is_integral() {
        return Err(Error::Parse(format!("`{text}` is not integral")));
    }
    PrimeIdeal::from_generator(x.numer()).ok_or_else(|| Error::Parse(format!("`{text}` does not generate a prime ideal")))
}

fn parse_prime_list(field: QuadField, text: &str) -> Result<Vec<PrimeIdeal>> {
    text.split(';').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_prime(field, s)).collect()
}

fn frac_string(x: &QuadFrac) -> String {
    x.to_string()
}

fn labels(ps: &[PrimeIdeal]) -> Vec<String> {
    ps.iter().map(|p| p.label()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchCandidate {
    pub point: [String; 3],
    pub j: String,
    pub potentially_bad: Vec<String>,
    pub igusa_clebsch: [String; 4],
}

/// Sweep `X_6(K)` by lines through a base point, keep the `j` whose
/// potentially bad primes away from 6 lie over `allowed`.
pub fn cmd_search(config: &RunConfig, allowed: &BTreeSet<u64>) -> Result<Vec<SearchCandidate>> {
    let field = config.require_field()?;
    if !shimura::splits_quaternion(field, 6)? {
        return Err(Error::FieldDoesNotSplit(field.label(), 6));
    }
    let base = shimura::find_base_point(field, 6, 3)?.ok_or_else(|| Error::FieldDoesNotSplit(field.label(), 6))?;
    let points = shimura::parametrize_conic(&base, config.height)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for pt in points {
        let Ok(j) = shimura::j_from_point(&pt) else { continue };
        let Ok(family) = shimura::baba_granath_curve(&j) else { continue };
        let bad = shimura::potentially_bad_primes(&j);
        if !bad.iter().all(|p| allowed.contains(&p.p())) || !seen.insert(j.to_string()) {
            continue;
        }
        out.push(SearchCandidate {
            point: pt.coords().clone().map(|c| c.to_string()),
            j: frac_string(&j),
            potentially_bad: labels(&bad),
            igusa_clebsch: family.igusa_clebsch().map(|x| frac_string(&x)),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub status: String,
    pub evidence: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub curve: String,
    pub newform: String,
    pub verdict: String,
    pub stages: Vec<StageReport>,
}

impl VerifyReport {
    fn passed(&self) -> bool {
        self.stages.iter().all(|s| s.status == "pass")
    }
}

/// Modulus for the residual stage: `P^(2e+1)` above 2, `P^(floor(3e/2)+1)`
/// above 3, the remaining level primes to the first power.
pub fn residual_modulus(form: &NewformRecord) -> Result<Modulus> {
    let field = form.field;
    let mut factors: BTreeMap<PrimeIdeal, u32> = BTreeMap::new();
    for p in split_prime(field, 2) {
        factors.insert(p.clone(), 2 * p.ramification() as u32 + 1);
    }
    for (p, _) in &form.level {
        let e = p.ramification() as u32;
        let exp = match p.p() {
            2 => 2 * e + 1,
            3 => 3 * e / 2 + 1,
            _ => 1,
        };
        factors.insert(p.clone(), exp);
    }
    Modulus::new(field, factors.into_iter().collect())
}

/// Primes good for both sources, known to `right`, with odd trace on
/// `left`, taken greedily while they raise the rank of the quadratic
/// evaluation matrix.
pub fn default_span_set(group: &Arc<RayClassGroup>, left: &dyn TraceSource, right: &dyn TraceSource) -> Result<Vec<PrimeIdeal>> {
    let basis = livne::character_basis(group, 2)?;
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut out = Vec::new();
    for p in right.known_primes() {
        if rows.len() == basis.len() {
            break;
        }
        if group.modulus().is_divisible_by(&p) || left.is_bad_at(&p) || right.is_bad_at(&p) {
            continue;
        }
        if left.trace_at(&p).is_none_or(|a| a.rem_euclid(2) == 0) {
            continue;
        }
        rows.push(basis.iter().map(|c| c.eval(&p)).collect::<Result<_>>()?);
        if livne::rank_mod(&rows, 2) == rows.len() {
            out.push(p);
        } else {
            rows.pop();
        }
    }
    if rows.len() < basis.len() {
        return Err(Error::InsufficientData(format!("{} reaches quadratic rank {} of {}", right.source_name(), rows.len(), basis.len())));
    }
    Ok(out)
}

/// Primes known to both sources where the cubic character of `left`
/// vanishes, chosen greedily to span the complement.
pub fn default_separating_set(group: &Arc<RayClassGroup>, left: &dyn TraceSource, right: &dyn TraceSource) -> Result<Vec<PrimeIdeal>> {
    let Ok(id) = livne::identify_cubic_character(group, livne::parity_oracle(left), &left.known_primes()) else {
        return Ok(Vec::new());
    };
    let complement = livne::cubic_complement(&id.character);
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut out = Vec::new();
    for p in right.known_primes() {
        if rows.len() == complement.len() {
            break;
        }
        if group.modulus().is_divisible_by(&p) || left.trace_at(&p).is_none() || id.character.eval(&p)? != 0 {
            continue;
        }
        rows.push(complement.iter().map(|c| c.eval(&p)).collect::<Result<_>>()?);
        if livne::rank_mod(&rows, 3) == rows.len() {
            out.push(p);
        } else {
            rows.pop();
        }
    }
    if rows.len() < complement.len() {
        return Err(Error::InsufficientData(format!("{} reaches cubic rank {} of {}", right.source_name(), rows.len(), complement.len())));
    }
    Ok(out)
}

fn stage(name: &str, result: Result<Value>) -> (StageReport, Option<Error>) {
    match result {
        Ok(evidence) => (StageReport { stage: name.into(), status: "pass".into(), evidence }, None),
        Err(e) => {
            let status = if e.is_verification_failure() {
                "fail"
            } else if e.is_incomplete_data() {
                "incomplete-data"
            } else {
                "error"
            };
            let evidence = json!({ "error": e.to_string() });
            (StageReport { stage: name.into(), status: status.into(), evidence }, Some(e))
        }
    }
}

pub struct VerifyOutcome {
    pub report: VerifyReport,
    pub table: TraceTable,
    /// First stage error, if any.
    pub error: Option<Error>,
}

/// trace table, genuineness, residual isomorphism, trace comparison.
/// Every stage runs; the first error decides the exit status.
pub fn cmd_verify(config: &RunConfig, curve: &GenusTwoCurve, form: &NewformRecord, args: &VerifyArgs) -> Result<VerifyOutcome> {
    if curve.field() != form.field {
        return Err(Error::FieldMismatch { expected: curve.field().label(), found: form.field.label() });
    }
    let field = form.field;
    let table = trace_table_with(curve, config.trace_bound, config.square_check_bound, config.parallel());
    let mut stages = Vec::new();
    let mut first: Option<Error> = None;
    let mut push = |(s, e): (StageReport, Option<Error>), first: &mut Option<Error>| {
        stages.push(s);
        if first.is_none() {
            *first = e;
        }
    };

    let shape = if table.shape_failures.is_empty() {
        Ok(json!({ "good_primes": table.records.len(), "bad": table.bad.iter().map(|b| b.prime.label()).collect::<Vec<_>>() }))
    } else {
        let b = &table.shape_failures[0];
        Err(Error::NotQmShape { prime: b.prime.label(), detail: b.reason.clone() })
    };
    push(stage("trace_table", shape), &mut first);

    let genuine = genuineness_test(&table).and_then(|g| match g {
        Genuineness::Witnessed { prime, conjugate, a, a_conj } => {
            Ok(json!({ "prime": prime.label(), "conjugate": conjugate.label(), "a": a, "a_conjugate": a_conj }))
        }
        Genuineness::Undecided => Err(Error::Inconsistent("no conjugate pair separates the traces".into())),
    });
    push(stage("genuineness", genuine), &mut first);

    let residual = (|| -> Result<Value> {
        let modulus = match &args.modulus {
            Some(m) => Modulus::parse(field, m)?,
            None => residual_modulus(form)?,
        };
        let group = Arc::new(livne::ray_class_group(&modulus)?);
        let span = match &args.span {
            Some(s) => parse_prime_list(field, s)?,
            None => default_span_set(&group, &table, form)?,
        };
        let separating = match &args.separating {
            Some(s) => parse_prime_list(field, s)?,
            None => default_separating_set(&group, &table, form)?,
        };
        let r = livne::residual_isomorphism_check(&table, form, &group, &span, &separating)?;
        let mut v = serde_json::to_value(&r)?;
        v["modulus"] = json!(modulus.label());
        Ok(v)
    })();
    push(stage("residual", residual), &mut first);

    let livne_cfg = (|| -> Result<LivneConfig> {
        let mut cfg = LivneConfig::for_field(field);
        cfg.bound = config.trace_bound;
        if let Some(t) = &config.twist_prime {
            cfg.twist_prime = Some(t.clone());
        }
        if let Some(t) = &args.twist_prime {
            cfg.twist_prime = Some(parse_prime(field, t)?);
        }
        Ok(cfg)
    })();
    let livne = livne_cfg
        .and_then(|cfg| livne::livne_verify(&table, form, &cfg))
        .and_then(|r| Ok(serde_json::to_value(&r)?));
    push(stage("livne", livne), &mut first);

    let report = VerifyReport {
        curve: curve.hash(),
        newform: form.label.clone(),
        verdict: String::new(),
        stages,
    };
    let verdict = if report.passed() { "verified" } else { "not-verified" };
    Ok(VerifyOutcome { report: VerifyReport { verdict: verdict.into(), ..report }, table, error: first })
}

struct SuiteEntry {
    name: &'static str,
    curve_file: &'static str,
    label: &'static str,
    /// Twist prime generator; the bundled Q(i) form uses the inert prime above 3.
    twist: Option<(i64, i64)>,
}

const SUITE: [SuiteEntry; 4] = [
    SuiteEntry { name: "C1", curve_file: "c1.json", label: "2.0.4.1-34225.3-a", twist: Some((3, 0)) },
    SuiteEntry { name: "C2", curve_file: "c2.json", label: "2.0.3.1-61009.1-a", twist: None },
    SuiteEntry { name: "C3", curve_file: "c3.json", label: "2.0.3.1-67081.3-a", twist: None },
    SuiteEntry { name: "C4", curve_file: "c4.json", label: "2.0.3.1-123201.1-b", twist: None },
];

#[derive(Clone, Debug, Serialize)]
pub struct SuiteRow {
    pub curve: String,
    pub newform: String,
    pub support_consistent: bool,
    pub missing_support: Vec<String>,
    pub genuine: String,
    pub residual: String,
    pub traces: String,
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub bound: u64,
    pub verified: usize,
    pub total: usize,
    pub rows: Vec<SuiteRow>,
}

impl SuiteSummary {
    /// 1 if any claim failed, 2 if some could not be decided, else 0.
    pub fn exit_code(&self) -> i32 {
        let failed = self.rows.iter().any(|r| {
            !r.support_consistent || [&r.genuine, &r.residual, &r.traces].iter().any(|s| s.starts_with("fail"))
        });
        if failed {
            1
        } else if self.verified < self.total {
            2
        } else {
            0
        }
    }
}

pub fn default_fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn stage_status(report: &VerifyReport, name: &str) -> String {
    let s = report.stages.iter().find(|s| s.stage == name).expect("stage ran");
    match s.status.as_str() {
        "pass" => "pass".into(),
        _ => format!("{}: {}", s.status, s.evidence["error"].as_str().unwrap_or("")),
    }
}

/// The four bundled curve and newform pairs through `cmd_verify`, plus
/// bad-prime support against the newform level.
pub fn cmd_paper_suite(config: &RunConfig, fixtures: &Path, store: Option<&ResultsStore>) -> Result<SuiteSummary> {
    let mut rows = Vec::new();
    for entry in &SUITE {
        let curve_path = fixtures.join("curves").join(entry.curve_file);
        let form_path = fixtures.join("newforms").join(format!("{}.json", entry.label));
        for p in [&curve_path, &form_path] {
            if !p.exists() {
                return Err(Error::FixtureMissing(p.display().to_string()));
            }
        }
        let curve = read_curve(&curve_path)?;
        let form = newform::parse_newform_file(&form_path)?;
        let support = curve.bad_prime_support();
        let missing: Vec<String> = form.level.iter().filter(|(p, _)| !support.contains(p)).map(|(p, _)| p.label()).collect();
        let args = VerifyArgs {
            curve: curve_path.clone(),
            newform: form_path.clone(),
            max_norm: config.trace_bound,
            square_check_norm: config.square_check_bound,
            twist_prime: entry.twist.map(|(a, b)| format!("{a}+{b}*w")),
            modulus: None,
            span: None,
            separating: None,
            store: None,
        };
        let outcome = cmd_verify(config, &curve, &form, &args)?;
        let report = &outcome.report;
        let row = SuiteRow {
            curve: entry.name.into(),
            newform: form.label.clone(),
            support_consistent: missing.is_empty(),
            missing_support: missing,
            genuine: stage_status(report, "genuineness"),
            residual: stage_status(report, "residual"),
            traces: stage_status(report, "livne"),
            verified: report.passed(),
        };
        if let Some(store) = store {
            store.append(&store_record(&curve, &outcome, Some(report.verdict.clone())))?;
        }
        rows.push(SuiteRow { verified: row.verified && row.support_consistent, ..row });
    }
    Ok(SuiteSummary {
        bound: config.trace_bound,
        verified: rows.iter().filter(|r| r.verified).count(),
        total: rows.len(),
        rows,
    })
}

fn store_record(curve: &GenusTwoCurve, outcome: &VerifyOutcome, verification: Option<String>) -> StoreRecord {
    let genuine = outcome.report.stages.iter().find(|s| s.stage == "genuineness").map(|s| s.status.clone());
    StoreRecord {
        curve_hash: curve.hash(),
        field: curve.field().label(),
        j: shimura::find_j_from_curve(curve).ok().map(|j| j.to_string()),
        disc_support: labels(&curve.bad_prime_support()),
        genuineness: genuine,
        verification,
        timestamp: now(),
    }
}

fn write_output(config: &RunConfig, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match &config.out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct FamilyDocument {
    field: String,
    j: String,
    /// `s^2` for the formal square root `s` in the coefficients.
    s_squared: String,
    /// Descending; each entry is `[x, y]` for `x + y*s`, as `[num_a, num_b, den]` triples.
    coeffs: Vec<[[Value; 3]; 2]>,
    igusa_clebsch: [String; 4],
    /// The curve over `K` itself when `s` lies in `K`.
    curve: Option<Value>,
}

fn family_document(j: &QuadFrac) -> Result<FamilyDocument> {
    let fam = shimura::baba_granath_curve(j)?;
    let field = j.field();
    let s2 = j.scale_int(-6);
    let curve = match s2.sqrt() {
        Some(s) => {
            let desc: Vec<QuadFrac> = fam.coeffs.iter().map(|c| c.x.plus(&c.y.times(&s))).collect();
            Some(serde_json::to_value(GenusTwoCurve::from_descending(field, desc)?.to_document())?)
        }
        None => None,
    };
    Ok(FamilyDocument {
        field: field.label(),
        j: j.to_string(),
        s_squared: s2.to_string(),
        coeffs: fam.coeffs.iter().map(|c| [frac_to_triple(&c.x), frac_to_triple(&c.y)]).collect(),
        igusa_clebsch: fam.igusa_clebsch().map(|x| x.to_string()),
        curve,
    })
}

fn dispatch(cli: &Cli, config: &RunConfig) -> Result<(Value, i32)> {
    let ok = |v: Value| Ok((v, 0));
    match &cli.command {
        Command::Conic(ConicCommand::Points { disc, height }) => {
            let field = config.require_field()?;
            let base = shimura::find_base_point(field, *disc, 3)?.ok_or_else(|| Error::FieldDoesNotSplit(field.label(), *disc))?;
            let pts = shimura::parametrize_conic(&base, *height)?;
            let points: Vec<Value> = pts
                .iter()
                .map(|p| {
                    let j = shimura::j_from_point(p).ok().map(|j| j.to_string());
                    json!({ "coords": p.coords().clone().map(|c| c.to_string()), "j": j })
                })
                .collect();
            ok(json!({
                "field": field.label(),
                "disc": disc,
                "base": base.coords().clone().map(|c| c.to_string()),
                "height": height,
                "points": points,
            }))
        }
        Command::Family(FamilyCommand::Curve { j }) => {
            let field = config.require_field()?;
            let j = quadfield::parse_element(field, j)?;
            ok(serde_json::to_value(family_document(&j)?)?)
        }
        Command::Family(FamilyCommand::Match { curve }) => {
            let c = read_curve(curve)?;
            let j = shimura::find_j_from_curve(&c)?;
            ok(json!({
                "curve": c.hash(),
                "field": c.field().label(),
                "j": j.to_string(),
                "potentially_bad": labels(&shimura::potentially_bad_primes(&j)),
            }))
        }
        Command::Analyze { curve, max_norm, square_check_norm } => {
            let c = read_curve(curve)?;
            let t = trace_table_with(&c, *max_norm, *square_check_norm, config.parallel());
            ok(serde_json::to_value(t.to_document())?)
        }
        Command::Genuine { curve, max_norm } => {
            let c = read_curve(curve)?;
            let t = trace_table_with(&c, *max_norm, 0, config.parallel());
            match genuineness_test(&t)? {
                Genuineness::Witnessed { prime, conjugate, a, a_conj } => ok(json!({
                    "verdict": "genuine-witnessed",
                    "prime": prime.label(),
                    "conjugate": conjugate.label(),
                    "a": a,
                    "a_conjugate": a_conj,
                })),
                Genuineness::Undecided => Ok((json!({ "verdict": "undecided", "bound": max_norm }), 1)),
            }
        }
        Command::CycleTypes { curve, max_norm } => {
            let c = read_curve(curve)?;
            let h = galois::cycle_type_histogram(&c, *max_norm);
            let h: BTreeMap<String, usize> = h
                .into_iter()
                .map(|(k, v)| (k.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","), v))
                .collect();
            ok(json!({ "curve": c.hash(), "bound": max_norm, "histogram": h }))
        }
        Command::GroupTheory { ell, precision } => {
            let ses = galois::verify_ses(*ell)?;
            let mut holds = ses.holds();
            let mut v = json!({ "ses": ses, "ses_holds": ses.holds() });
            if let Some(k) = precision {
                let local = galois::verify_local_model(*ell, *k)?;
                holds &= local.holds();
                v["local_model"] = serde_json::to_value(&local)?;
                v["local_model_holds"] = json!(local.holds());
            }
            Ok((v, if holds { 0 } else { 1 }))
        }
        Command::Rcg { modulus } => {
            let field = config.require_field()?;
            let m = Modulus::parse(field, modulus)?;
            let g = livne::ray_class_group(&m)?;
            ok(json!({
                "field": field.label(),
                "modulus": m.label(),
                "norm": m.norm(),
                "invariants": g.invariants(),
                "order": g.order(),
                "residue_units": g.residue_unit_count(),
                "unit_image": g.unit_image_order(),
                "generators": g.generators().iter().map(QuadElement::to_string).collect::<Vec<_>>(),
            }))
        }
        Command::Newform(NewformCommand::Show { file }) => {
            let r = newform::parse_newform_file(file)?;
            ok(serde_json::to_value(r.to_document())?)
        }
        Command::Newform(NewformCommand::Fetch { label, cache_dir }) => {
            let r = newform::fetch_lmfdb(label, &newform::HttpSource::from_env(), cache_dir, config.offline)?;
            ok(serde_json::to_value(r.to_document())?)
        }
        Command::Livne(LivneCommand::Verify { curve, newform: nf, max_norm, twist_prime }) => {
            let c = read_curve(curve)?;
            let form = newform::parse_newform_file(nf)?;
            let mut cfg = LivneConfig::for_field(form.field);
            cfg.bound = *max_norm;
            if let Some(t) = twist_prime.as_deref().map(|t| parse_prime(form.field, t)).transpose()? {
                cfg.twist_prime = Some(t);
            }
            let t = trace_table_with(&c, *max_norm, 0, config.parallel());
            ok(serde_json::to_value(livne::livne_verify(&t, &form, &cfg)?)?)
        }
        Command::Verify(args) => {
            let c = read_curve(&args.curve)?;
            let form = newform::parse_newform_file(&args.newform)?;
            let cfg = RunConfig { trace_bound: args.max_norm, square_check_bound: args.square_check_norm, ..config.clone() };
            cfg.validate()?;
            let outcome = cmd_verify(&cfg, &c, &form, args)?;
            if let Some(s) = &args.store {
                ResultsStore::open(s).append(&store_record(&c, &outcome, Some(outcome.report.verdict.clone())))?;
            }
            let code = outcome.error.as_ref().map_or(0, exit_code);
            Ok((serde_json::to_value(&outcome.report)?, code))
        }
        Command::PaperSuite { fixtures, max_norm, store } => {
            let dir = fixtures.clone().unwrap_or_else(default_fixture_dir);
            let cfg = RunConfig { trace_bound: *max_norm, ..config.clone() };
            cfg.validate()?;
            let store = store.as_ref().map(ResultsStore::open);
            let s = cmd_paper_suite(&cfg, &dir, store.as_ref())?;
            let code = s.exit_code();
            Ok((serde_json::to_value(&s)?, code))
        }
        Command::Search { height, allowed, store } => {
            let allowed: BTreeSet<u64> = allowed
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad prime `{s}`"))))
                .collect::<Result<_>>()?;
            let cfg = RunConfig { height: *height, ..config.clone() };
            cfg.validate()?;
            let found = cmd_search(&cfg, &allowed)?;
            if let Some(s) = store {
                let store = ResultsStore::open(s);
                for c in &found {
                    store.append(&StoreRecord {
                        curve_hash: String::new(),
                        field: cfg.require_field()?.label(),
                        j: Some(c.j.clone()),
                        disc_support: c.potentially_bad.clone(),
                        genuineness: None,
                        verification: None,
                        timestamp: now(),
                    })?;
                }
            }
            ok(json!({ "field": cfg.require_field()?.label(), "height": height, "allowed": allowed, "candidates": found }))
        }
    }
}

fn config_from(cli: &Cli) -> Result<RunConfig> {
    let field = cli.field.as_deref().map(QuadField::from_label).transpose()?;
    let cfg = RunConfig {
        field,
        jobs: cli.jobs.unwrap_or(1),
        out: cli.out.clone(),
        offline: cli.offline,
        ..RunConfig::default()
    };
    cfg.validate()?;
    if cfg.jobs > 1 {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global();
    }
    Ok(cfg)
}

/// Parse arguments, run, print; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = config_from(&cli).and_then(|cfg| {
        let (value, code) = dispatch(&cli, &cfg)?;
        write_output(&cfg, &value)?;
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.to_string() }));
            exit_code(&e)
        }
    }
}
