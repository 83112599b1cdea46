//! JSON documents and their byte-stable rendering.
//!
//! Every file carries `"qsr_version": 1`, a `kind`, a free-form string map
//! `meta` and a `payload`. Complex numbers are `[re, im]`, matrices are
//! row-major nested arrays, and doubled matrices are stored as their upper
//! blocks `{"r1": .., "r2": ..}`. A doubled matrix may also be supplied in
//! expanded form as `{"full": ..}`; it is then checked for doubled structure
//! on load.
//!
//! Output keys are sorted and reals are written with 17 significant digits,
//! so rendering the same document twice gives identical bytes and parsing
//! the rendering gives back the same values.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::value::RawValue;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::cavity::CavitySqueezerParams;
use crate::doubled::{self, DoubledMatrix, DEFAULT_STRUCTURE_TOL};
use crate::error::{QsrError, Result};
use crate::linalg::ComplexMatrix;
use crate::perturbation::{PerturbedBlocks, PerturbedSystem};
use crate::special_class::{self, BogoliubovComponent, SpecialClassParams};
use crate::system::{PhysicalParams, QuantumLinearSystem, Verdict};

pub const SCHEMA_VERSION: u32 = 1;

pub type WireComplex = [f64; 2];
pub type WireMatrix = Vec<Vec<WireComplex>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WireDoubled {
    Blocks { r1: WireMatrix, r2: WireMatrix },
    Full { full: WireMatrix },
}

pub fn complex_to_wire(z: Complex64) -> WireComplex {
    [z.re, z.im]
}

pub fn complex_from_wire(w: WireComplex) -> Complex64 {
    Complex64::new(w[0], w[1])
}

pub fn matrix_to_wire(m: &ComplexMatrix) -> WireMatrix {
    m.row_iter()
        .map(|row| row.iter().map(|&z| complex_to_wire(z)).collect())
        .collect()
}

pub fn matrix_from_wire(w: &WireMatrix, field: &str) -> Result<ComplexMatrix> {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(QsrError::invalid(format!("{field} is empty")));
    }
    if let Some(bad) = w.iter().find(|r| r.len() != cols) {
        return Err(QsrError::dims(format!("{field} row length"), cols, bad.len()));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |r, c| complex_from_wire(w[r][c])))
}

pub fn doubled_to_wire(d: &DoubledMatrix) -> WireDoubled {
    WireDoubled::Blocks {
        r1: matrix_to_wire(d.upper_left()),
        r2: matrix_to_wire(d.upper_right()),
    }
}

pub fn doubled_from_wire(w: &WireDoubled, field: &str) -> Result<DoubledMatrix> {
    match w {
        WireDoubled::Blocks { r1, r2 } => {
            DoubledMatrix::new(matrix_from_wire(r1, field)?, matrix_from_wire(r2, field)?)
        }
        WireDoubled::Full { full } => {
            doubled::contract_named(&matrix_from_wire(full, field)?, DEFAULT_STRUCTURE_TOL, field)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemPayload {
    pub f: WireDoubled,
    pub g: WireDoubled,
    pub h: WireDoubled,
    pub k: WireDoubled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParamsPayload {
    pub theta: WireMatrix,
    pub m: WireDoubled,
    pub n: WireDoubled,
    pub s: WireMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbedPayload {
    pub fa: WireDoubled,
    pub fb: WireDoubled,
    pub fc: WireDoubled,
    pub fd: WireDoubled,
    pub ga: WireDoubled,
    pub gb: WireDoubled,
    pub ha: WireDoubled,
    pub hb: WireDoubled,
    pub k: WireDoubled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecialClassPayload {
    pub ma: WireDoubled,
    pub mb: WireDoubled,
    pub mc: WireDoubled,
    pub md: WireDoubled,
    pub na: WireDoubled,
    pub nb: WireDoubled,
    pub s: WireMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BogoliubovPayload {
    pub b: WireDoubled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySqueezerPayload {
    pub k1: f64,
    pub k2: f64,
    pub gamma: f64,
    pub chi: WireComplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    System,
    PhysicalParams,
    Perturbed,
    SpecialClass,
    Bogoliubov,
    CavitySqueezer,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::System => "system",
            Kind::PhysicalParams => "physical_params",
            Kind::Perturbed => "perturbed",
            Kind::SpecialClass => "special_class",
            Kind::Bogoliubov => "bogoliubov",
            Kind::CavitySqueezer => "cavity_squeezer",
        }
    }
}

/// A validated document payload.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    System(QuantumLinearSystem),
    PhysicalParams(PhysicalParams),
    Perturbed(PerturbedSystem),
    SpecialClass(SpecialClassParams),
    Bogoliubov(BogoliubovComponent),
    CavitySqueezer(CavitySqueezerParams),
}

impl Payload {
    pub fn kind(&self) -> Kind {
        match self {
            Payload::System(_) => Kind::System,
            Payload::PhysicalParams(_) => Kind::PhysicalParams,
            Payload::Perturbed(_) => Kind::Perturbed,
            Payload::SpecialClass(_) => Kind::SpecialClass,
            Payload::Bogoliubov(_) => Kind::Bogoliubov,
            Payload::CavitySqueezer(_) => Kind::CavitySqueezer,
        }
    }

    pub fn to_value(&self) -> Value {
        let v = match self {
            Payload::System(s) => serde_json::to_value(system_payload(s)),
            Payload::PhysicalParams(p) => serde_json::to_value(PhysicalParamsPayload {
                theta: matrix_to_wire(&p.theta),
                m: doubled_to_wire(&p.m),
                n: doubled_to_wire(&p.n),
                s: matrix_to_wire(&p.s),
            }),
            Payload::Perturbed(ps) => serde_json::to_value(PerturbedPayload {
                fa: doubled_to_wire(ps.fa()),
                fb: doubled_to_wire(ps.fb()),
                fc: doubled_to_wire(ps.fc()),
                fd: doubled_to_wire(ps.fd()),
                ga: doubled_to_wire(ps.ga()),
                gb: doubled_to_wire(ps.gb()),
                ha: doubled_to_wire(ps.ha()),
                hb: doubled_to_wire(ps.hb()),
                k: doubled_to_wire(ps.k()),
            }),
            Payload::SpecialClass(p) => serde_json::to_value(SpecialClassPayload {
                ma: doubled_to_wire(&p.ma),
                mb: doubled_to_wire(&p.mb),
                mc: doubled_to_wire(&p.mc),
                md: doubled_to_wire(&p.md),
                na: doubled_to_wire(&p.na),
                nb: doubled_to_wire(&p.nb),
                s: matrix_to_wire(&p.s),
            }),
            Payload::Bogoliubov(b) => serde_json::to_value(BogoliubovPayload {
                b: doubled_to_wire(b.matrix()),
            }),
            Payload::CavitySqueezer(p) => serde_json::to_value(CavitySqueezerPayload {
                k1: p.k1,
                k2: p.k2,
                gamma: p.gamma,
                chi: complex_to_wire(p.chi),
            }),
        };
        v.expect("wire payloads serialize")
    }
}

fn system_payload(s: &QuantumLinearSystem) -> SystemPayload {
    SystemPayload {
        f: doubled_to_wire(s.f()),
        g: doubled_to_wire(s.g()),
        h: doubled_to_wire(s.h()),
        k: doubled_to_wire(s.k()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub meta: BTreeMap<String, String>,
    pub payload: Payload,
}

impl Document {
    pub fn new(payload: Payload) -> Self {
        Document {
            meta: BTreeMap::new(),
            payload,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn kind(&self) -> Kind {
        self.payload.kind()
    }

    pub fn to_value(&self) -> Value {
        serde_json::json!({
            "qsr_version": SCHEMA_VERSION,
            "kind": self.kind().as_str(),
            "meta": self.meta,
            "payload": self.payload.to_value(),
        })
    }

    pub fn render(&self) -> String {
        render(&self.to_value())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<'a> {
    qsr_version: u32,
    kind: Kind,
    #[serde(default)]
    meta: BTreeMap<String, String>,
    #[serde(borrow)]
    payload: &'a RawValue,
}

fn line_col_of(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1);
    (line, column)
}

fn malformed(e: &serde_json::Error) -> QsrError {
    QsrError::MalformedInput {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn typed_payload<'a, T: Deserialize<'a>>(text: &str, raw: &'a RawValue) -> Result<T> {
    serde_json::from_str(raw.get()).map_err(|e| {
        // Translate the position inside the payload to the whole text.
        let offset = raw.get().as_ptr() as usize - text.as_ptr() as usize;
        let (base_line, base_col) = line_col_of(text, offset);
        let (line, column) = if e.line() <= 1 {
            (base_line, base_col + e.column())
        } else {
            (base_line + e.line() - 1, e.column())
        };
        QsrError::MalformedInput {
            line,
            column,
            message: e.to_string(),
        }
    })
}

fn perturbed_from(p: &PerturbedPayload) -> Result<PerturbedSystem> {
    PerturbedSystem::new(PerturbedBlocks {
        fa: doubled_from_wire(&p.fa, "Fa")?,
        fb: doubled_from_wire(&p.fb, "Fb")?,
        fc: doubled_from_wire(&p.fc, "Fc")?,
        fd: doubled_from_wire(&p.fd, "Fd")?,
        ga: doubled_from_wire(&p.ga, "Ga")?,
        gb: doubled_from_wire(&p.gb, "Gb")?,
        ha: doubled_from_wire(&p.ha, "Ha")?,
        hb: doubled_from_wire(&p.hb, "Hb")?,
        k: doubled_from_wire(&p.k, "K")?,
    })
}

fn special_class_from(p: &SpecialClassPayload) -> Result<SpecialClassParams> {
    let params = SpecialClassParams {
        ma: doubled_from_wire(&p.ma, "Ma")?,
        mb: doubled_from_wire(&p.mb, "Mb")?,
        mc: doubled_from_wire(&p.mc, "Mc")?,
        md: doubled_from_wire(&p.md, "Md")?,
        na: doubled_from_wire(&p.na, "Na")?,
        nb: doubled_from_wire(&p.nb, "Nb")?,
        s: matrix_from_wire(&p.s, "S")?,
    };
    let v = special_class::validate_params(&params, DEFAULT_STRUCTURE_TOL);
    if let Some(msg) = v.dimension_error {
        return Err(QsrError::dims("special-class parameters", "consistent block shapes", msg));
    }
    if !v.passed {
        let (field, residual) = v.worst();
        return Err(QsrError::structure(field, residual));
    }
    Ok(params)
}

/// Parses and validates a document.
pub fn parse_document(text: &str) -> Result<Document> {
    let env: Envelope = serde_json::from_str(text).map_err(|e| malformed(&e))?;
    if env.qsr_version != SCHEMA_VERSION {
        return Err(QsrError::MalformedInput {
            line: 1,
            column: 1,
            message: format!("unsupported qsr_version {}, expected {SCHEMA_VERSION}", env.qsr_version),
        });
    }
    let raw = env.payload;
    let payload = match env.kind {
        Kind::System => {
            let p: SystemPayload = typed_payload(text, raw)?;
            Payload::System(QuantumLinearSystem::new(
                doubled_from_wire(&p.f, "F")?,
                doubled_from_wire(&p.g, "G")?,
                doubled_from_wire(&p.h, "H")?,
                doubled_from_wire(&p.k, "K")?,
            )?)
        }
        Kind::PhysicalParams => {
            let p: PhysicalParamsPayload = typed_payload(text, raw)?;
            let params = PhysicalParams {
                theta: matrix_from_wire(&p.theta, "Theta")?,
                m: doubled_from_wire(&p.m, "M")?,
                n: doubled_from_wire(&p.n, "N")?,
                s: matrix_from_wire(&p.s, "S")?,
            };
            params.validate(DEFAULT_STRUCTURE_TOL)?;
            Payload::PhysicalParams(params)
        }
        Kind::Perturbed => Payload::Perturbed(perturbed_from(&typed_payload(text, raw)?)?),
        Kind::SpecialClass => Payload::SpecialClass(special_class_from(&typed_payload(text, raw)?)?),
        Kind::Bogoliubov => {
            let p: BogoliubovPayload = typed_payload(text, raw)?;
            Payload::Bogoliubov(BogoliubovComponent::new(
                doubled_from_wire(&p.b, "B")?,
                DEFAULT_STRUCTURE_TOL,
            )?)
        }
        Kind::CavitySqueezer => {
            let p: CavitySqueezerPayload = typed_payload(text, raw)?;
            Payload::CavitySqueezer(CavitySqueezerParams::new(p.k1, p.k2, p.gamma, complex_from_wire(p.chi))?)
        }
    };
    Ok(Document {
        meta: env.meta,
        payload,
    })
}

pub fn load_document(path: &Path) -> Result<Document> {
    parse_document(&std::fs::read_to_string(path)?)
}

pub fn save_document(doc: &Document, path: &Path) -> Result<()> {
    std::fs::write(path, doc.render())?;
    Ok(())
}

/// Lower-case hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Machine-readable result of a CLI command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub qsr_version: u32,
    pub command: String,
    /// SHA-256 of each input document, keyed by role.
    pub inputs: BTreeMap<String, String>,
    /// Named residuals; `null` when not finite.
    pub residuals: BTreeMap<String, Option<f64>>,
    pub verdict: String,
    /// Pass/fail tolerance, when the command has one.
    pub tolerance: Option<f64>,
    pub samples_used: Vec<WireComplex>,
    pub outputs: Value,
}

impl ReportDocument {
    pub fn new(command: &str, tolerance: Option<f64>) -> Self {
        ReportDocument {
            qsr_version: SCHEMA_VERSION,
            command: command.to_string(),
            inputs: BTreeMap::new(),
            residuals: BTreeMap::new(),
            verdict: Verdict::Pass.as_str().to_string(),
            tolerance,
            samples_used: Vec::new(),
            outputs: Value::Object(Default::default()),
        }
    }

    pub fn residual(&mut self, name: &str, value: f64) {
        self.residuals
            .insert(name.to_string(), value.is_finite().then_some(value));
    }

    pub fn set_verdict(&mut self, v: Verdict) {
        self.verdict = v.as_str().to_string();
    }

    pub fn set_samples(&mut self, samples: &[Complex64]) {
        self.samples_used = samples.iter().map(|&s| complex_to_wire(s)).collect();
    }

    pub fn render(&self) -> String {
        render(&serde_json::to_value(self).expect("reports serialize"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| malformed(&e))
    }
}

/// Objects indented two spaces per level, arrays on one line, reals in
/// `{:.16e}` form.
#[derive(Default)]
struct StableFormatter {
    indent: usize,
    first: bool,
}

impl StableFormatter {
    fn newline<W: ?Sized + io::Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..self.indent {
            w.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl Formatter for StableFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.first = true;
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if !self.first {
            self.newline(w)?;
        }
        self.first = false;
        w.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        self.first = false;
        self.newline(w)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }
}

/// Byte-stable rendering of `value`, newline terminated.
pub fn render(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, StableFormatter::default());
    value.serialize(&mut ser).expect("writing to memory");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes utf-8")
}
