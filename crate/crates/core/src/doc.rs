//! JSON problem documents: strict parsing, validation diagnostics, and a
//! canonical emitter whose output is byte-stable.
//!
//! A document bundles one parabolic sheaf (extension, base geometry, chart,
//! weight classes, transition matrices) with an optional list of named
//! sampling charts. The canonical layout sorts object keys, keeps rationals
//! in lowest terms, lists transitions by ascending (class, generator) with
//! zero matrices omitted, and ends with a newline; `emit(parse(s)) == s`
//! for any canonical `s`.

use crate::base::BaseGeometry;
use crate::chart::Chart;
use crate::error::Error;
use crate::monoid::{KummerExtension, MonoidPresentation};
use crate::poly::HilbertPoly;
use crate::sheaf::{Mat, ParabolicSheaf, SectionPoly, WeightClass};
use crate::stability::GeneratingChart;
use crate::{parse_rat_strict, rat_string, IVec, QVec, Rat, Result};
use serde_json::{Map, Value};
use std::collections::{BTreeSet, HashMap};

pub const DOC_VERSION: i64 = 1;

/// A parsed problem document.
#[derive(Clone, Debug)]
pub struct Document {
    pub sheaf: ParabolicSheaf,
    /// Named sampling charts beyond the implicit "standard" one.
    pub charts: Vec<GeneratingChart>,
}

/// The extension step accepted by pullback-style commands: either a free
/// tower level or an explicit list of target generators.
pub enum ExtensionStep {
    Level(i64),
    TargetQ(Vec<QVec>),
}

fn obj<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::Schema(format!("{path}: expected an object")))
}

fn arr<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::Schema(format!("{path}: expected an array")))
}

fn string<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::Schema(format!("{path}: expected a string")))
}

fn integer(v: &Value, path: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| Error::Schema(format!("{path}: expected an integer")))
}

fn index(v: &Value, path: &str) -> Result<usize> {
    let n = integer(v, path)?;
    usize::try_from(n)
        .map_err(|_| Error::Schema(format!("{path}: expected a nonnegative integer")))
}

fn get<'a>(m: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    m.get(key).ok_or_else(|| Error::Schema(format!("{path}: missing key {key:?}")))
}

fn check_keys(m: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<()> {
    for k in m.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Schema(format!("{path}: unknown key {k:?}")));
        }
    }
    Ok(())
}

fn rational(v: &Value, path: &str) -> Result<Rat> {
    let s = string(v, path)?;
    parse_rat_strict(s).map_err(|e| Error::Schema(format!("{path}: {e}")))
}

fn rat_vec(v: &Value, path: &str) -> Result<QVec> {
    arr(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| rational(x, &format!("{path}[{i}]")))
        .collect()
}

fn int_vec(v: &Value, path: &str) -> Result<IVec> {
    arr(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| integer(x, &format!("{path}[{i}]")))
        .collect()
}

fn rat_rows(v: &Value, path: &str) -> Result<Vec<QVec>> {
    arr(v, path)?
        .iter()
        .enumerate()
        .map(|(i, row)| rat_vec(row, &format!("{path}[{i}]")))
        .collect()
}

pub fn parse_monoid(v: &Value, path: &str) -> Result<MonoidPresentation> {
    let m = obj(v, path)?;
    check_keys(m, &["ambient_rank", "generators"], path)?;
    let rank = index(get(m, "ambient_rank", path)?, &format!("{path}.ambient_rank"))?;
    let gpath = format!("{path}.generators");
    let gens = arr(get(m, "generators", path)?, &gpath)?
        .iter()
        .enumerate()
        .map(|(i, g)| int_vec(g, &format!("{gpath}[{i}]")))
        .collect::<Result<Vec<IVec>>>()?;
    MonoidPresentation::new(rank, gens)
}

pub fn parse_extension(v: &Value, path: &str) -> Result<KummerExtension> {
    let m = obj(v, path)?;
    check_keys(m, &["p", "q"], path)?;
    let p = parse_monoid(get(m, "p", path)?, &format!("{path}.p"))?;
    let q = rat_rows(get(m, "q", path)?, &format!("{path}.q"))?;
    KummerExtension::new(p, q)
}

fn base_geometry(v: &Value, path: &str) -> Result<BaseGeometry> {
    let m = obj(v, path)?;
    let kind = string(get(m, "kind", path)?, &format!("{path}.kind"))?;
    match kind {
        "log_point" => {
            check_keys(m, &["kind"], path)?;
            Ok(BaseGeometry::LogPoint)
        }
        "p1" => {
            check_keys(m, &["kind"], path)?;
            Ok(BaseGeometry::P1)
        }
        "p1xp1" => {
            check_keys(m, &["kind"], path)?;
            Ok(BaseGeometry::P1xP1)
        }
        "curve" => {
            check_keys(m, &["kind", "genus", "polarization_degree"], path)?;
            let genus = integer(get(m, "genus", path)?, &format!("{path}.genus"))?;
            let degree = integer(
                get(m, "polarization_degree", path)?,
                &format!("{path}.polarization_degree"),
            )?;
            if genus < 0 {
                return Err(Error::Schema(format!("{path}.genus: must be nonnegative")));
            }
            if degree < 1 {
                return Err(Error::Schema(format!(
                    "{path}.polarization_degree: must be positive"
                )));
            }
            Ok(BaseGeometry::Curve { genus, polarization_degree: degree })
        }
        other => Err(Error::Schema(format!("{path}.kind: unknown base geometry {other:?}"))),
    }
}

fn chart_section(
    v: &Value,
    path: &str,
    kummer: KummerExtension,
    base: BaseGeometry,
) -> Result<Chart> {
    let m = obj(v, path)?;
    check_keys(m, &["pic_map", "zero_sections"], path)?;
    let ppath = format!("{path}.pic_map");
    let pic_map = arr(get(m, "pic_map", path)?, &ppath)?
        .iter()
        .enumerate()
        .map(|(i, row)| int_vec(row, &format!("{ppath}[{i}]")))
        .collect::<Result<Vec<IVec>>>()?;
    let zpath = format!("{path}.zero_sections");
    let mut flags = BTreeSet::new();
    for (i, z) in arr(get(m, "zero_sections", path)?, &zpath)?.iter().enumerate() {
        let gi = index(z, &format!("{zpath}[{i}]"))?;
        if !flags.insert(gi) {
            return Err(Error::Schema(format!("{zpath}: duplicate index {gi}")));
        }
    }
    Chart::new(kummer, base, pic_map, &flags)
}

fn term(v: &Value, path: &str, rank: usize) -> Result<(IVec, Rat)> {
    let m = obj(v, path)?;
    check_keys(m, &["coef", "monomial"], path)?;
    let coef = rational(get(m, "coef", path)?, &format!("{path}.coef"))?;
    let mono = int_vec(get(m, "monomial", path)?, &format!("{path}.monomial"))?;
    if mono.len() != rank {
        return Err(Error::Schema(format!(
            "{path}.monomial: expected {rank} coordinates, found {}",
            mono.len()
        )));
    }
    Ok((mono, coef))
}

// A single term is written as a bare object, a general polynomial as an
// array of terms; the zero entry is the empty array.
fn entry(v: &Value, path: &str, rank: usize) -> Result<SectionPoly> {
    let terms: Vec<(IVec, Rat)> = match v {
        Value::Object(_) => vec![term(v, path, rank)?],
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, t)| term(t, &format!("{path}[{i}]"), rank))
            .collect::<Result<_>>()?,
        _ => {
            return Err(Error::Schema(format!(
                "{path}: expected a term object or an array of terms"
            )))
        }
    };
    let mut p = SectionPoly::zero();
    for (mono, coef) in terms {
        p = p.add(&SectionPoly::monomial(mono, coef));
    }
    Ok(p)
}

fn sheaf_section(v: &Value, path: &str, chart: Chart) -> Result<ParabolicSheaf> {
    let m = obj(v, path)?;
    check_keys(m, &["classes", "transitions"], path)?;
    let rank = chart.ambient_rank();

    let cpath = format!("{path}.classes");
    let mut classes = Vec::new();
    for (i, cv) in arr(get(m, "classes", path)?, &cpath)?.iter().enumerate() {
        let ip = format!("{cpath}[{i}]");
        let co = obj(cv, &ip)?;
        check_keys(co, &["rep", "summands"], &ip)?;
        let rep = rat_vec(get(co, "rep", &ip)?, &format!("{ip}.rep"))?;
        let spath = format!("{ip}.summands");
        let summands = arr(get(co, "summands", &ip)?, &spath)?
            .iter()
            .enumerate()
            .map(|(j, s)| int_vec(s, &format!("{spath}[{j}]")))
            .collect::<Result<Vec<IVec>>>()?;
        classes.push(WeightClass { rep, summands });
    }

    // Omitted matrices default to zero; their row counts come from the class
    // one generator step up, or zero when that class is not in the document
    // (validation reports the missing class).
    let kummer = &chart.kummer;
    let gens = kummer.q_indecs.len();
    let mut by_coset: HashMap<usize, usize> = HashMap::new();
    for (i, cl) in classes.iter().enumerate() {
        if let Ok(k) = kummer.class_of(&cl.rep) {
            by_coset.entry(k).or_insert(i);
        }
    }
    let mut transitions: Vec<Vec<Mat>> = (0..classes.len())
        .map(|c| {
            (0..gens)
                .map(|g| {
                    let rep = &classes[c].rep;
                    let up: QVec =
                        rep.iter().zip(&kummer.q_indecs[g]).map(|(a, b)| a + b).collect();
                    let rows = kummer
                        .class_of(&up)
                        .ok()
                        .and_then(|k| by_coset.get(&k))
                        .map_or(0, |&j| classes[j].summands.len());
                    Mat::zero(rows, classes[c].summands.len())
                })
                .collect()
        })
        .collect();

    let tpath = format!("{path}.transitions");
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, tv) in arr(get(m, "transitions", path)?, &tpath)?.iter().enumerate() {
        let ip = format!("{tpath}[{i}]");
        let to = obj(tv, &ip)?;
        check_keys(to, &["class", "gen", "matrix"], &ip)?;
        let c = index(get(to, "class", &ip)?, &format!("{ip}.class"))?;
        let g = index(get(to, "gen", &ip)?, &format!("{ip}.gen"))?;
        if c >= classes.len() {
            return Err(Error::Schema(format!("{ip}.class: index {c} out of range")));
        }
        if g >= gens {
            return Err(Error::Schema(format!("{ip}.gen: index {g} out of range")));
        }
        if !seen.insert((c, g)) {
            return Err(Error::Schema(format!(
                "{ip}: duplicate matrix for class {c} generator {g}"
            )));
        }
        let mpath = format!("{ip}.matrix");
        let rows = arr(get(to, "matrix", &ip)?, &mpath)?;
        let cols = classes[c].summands.len();
        let mut mat = Mat::zero(rows.len(), cols);
        for (r, rv) in rows.iter().enumerate() {
            let rp = format!("{mpath}[{r}]");
            let row = arr(rv, &rp)?;
            if row.len() != cols {
                return Err(Error::Schema(format!(
                    "{rp}: expected {cols} entries, found {}",
                    row.len()
                )));
            }
            for (cix, ev) in row.iter().enumerate() {
                *mat.at_mut(r, cix) = entry(ev, &format!("{rp}[{cix}]"), rank)?;
            }
        }
        transitions[c][g] = mat;
    }

    ParabolicSheaf::new(chart, classes, transitions)
}

fn generating_charts(v: &Value, path: &str) -> Result<Vec<GeneratingChart>> {
    let mut out: Vec<GeneratingChart> = Vec::new();
    for (i, cv) in arr(v, path)?.iter().enumerate() {
        let ip = format!("{path}[{i}]");
        let m = obj(cv, &ip)?;
        check_keys(m, &["name", "p", "q", "transfer"], &ip)?;
        let name = string(get(m, "name", &ip)?, &format!("{ip}.name"))?.to_string();
        if name.is_empty() {
            return Err(Error::Schema(format!("{ip}.name: empty chart name")));
        }
        if name == "standard" {
            return Err(Error::Schema(format!(
                "{ip}.name: \"standard\" names the sheaf's own chart"
            )));
        }
        if out.iter().any(|c| c.name == name) {
            return Err(Error::Schema(format!("{ip}.name: duplicate chart name {name:?}")));
        }
        let p = parse_monoid(get(m, "p", &ip)?, &format!("{ip}.p"))?;
        let q = rat_rows(get(m, "q", &ip)?, &format!("{ip}.q"))?;
        let source = KummerExtension::new(p, q)?;
        let transfer = rat_rows(get(m, "transfer", &ip)?, &format!("{ip}.transfer"))?;
        out.push(GeneratingChart { name, source, transfer });
    }
    Ok(out)
}

/// Parses a document, enforcing the schema strictly: unknown keys, rationals
/// not in lowest terms, bad cross-references, and malformed chart data are
/// all hard errors.
pub fn parse_document(text: &str) -> Result<Document> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("invalid JSON: {e}")))?;
    let top = obj(&v, "document")?;
    check_keys(
        top,
        &["version", "extension", "base", "chart", "sheaf", "generating_charts"],
        "document",
    )?;
    let version = integer(get(top, "version", "document")?, "document.version")?;
    if version != DOC_VERSION {
        return Err(Error::Schema(format!("unsupported document version {version}")));
    }
    let kummer = parse_extension(get(top, "extension", "document")?, "extension")?;
    let base = base_geometry(get(top, "base", "document")?, "base")?;
    let chart = chart_section(get(top, "chart", "document")?, "chart", kummer, base)?;
    let sheaf = sheaf_section(get(top, "sheaf", "document")?, "sheaf", chart)?;
    let charts = match top.get("generating_charts") {
        None => Vec::new(),
        Some(v) => generating_charts(v, "generating_charts")?,
    };
    Ok(Document { sheaf, charts })
}

/// Full diagnostics for a document: parse errors come back as a single
/// diagnostic, structurally sound documents get the sheaf laws and the
/// sampling-chart compatibility checks.
pub fn validate_document(text: &str) -> Vec<String> {
    let doc = match parse_document(text) {
        Ok(d) => d,
        Err(e) => return vec![e.to_string()],
    };
    let mut diags = doc.sheaf.validate();
    for c in &doc.charts {
        if let Err(e) = c.validate_for(&doc.sheaf.chart) {
            diags.push(format!("generating chart {:?}: {e}", c.name));
        }
    }
    diags
}

/// `{"level": m}` or `{"target_q": [[rationals]]}`.
pub fn parse_extension_step(v: &Value, path: &str) -> Result<ExtensionStep> {
    let m = obj(v, path)?;
    if m.contains_key("level") {
        check_keys(m, &["level"], path)?;
        let n = integer(get(m, "level", path)?, &format!("{path}.level"))?;
        if n < 1 {
            return Err(Error::Schema(format!("{path}.level: must be positive")));
        }
        Ok(ExtensionStep::Level(n))
    } else if m.contains_key("target_q") {
        check_keys(m, &["target_q"], path)?;
        Ok(ExtensionStep::TargetQ(rat_rows(get(m, "target_q", path)?, &format!("{path}.target_q"))?))
    } else {
        Err(Error::Schema(format!("{path}: expected key \"level\" or \"target_q\"")))
    }
}

pub fn rat_value(r: &Rat) -> Value {
    Value::String(rat_string(r))
}

fn rat_vec_value(v: &QVec) -> Value {
    Value::Array(v.iter().map(rat_value).collect())
}

fn int_vec_value(v: &[i64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::from(x)).collect())
}

fn monoid_value(m: &MonoidPresentation) -> Value {
    let mut o = Map::new();
    o.insert("ambient_rank".into(), Value::from(m.ambient_rank as u64));
    o.insert(
        "generators".into(),
        Value::Array(m.generators.iter().map(|g| int_vec_value(g)).collect()),
    );
    Value::Object(o)
}

fn extension_value(k: &KummerExtension) -> Value {
    let mut o = Map::new();
    o.insert("p".into(), monoid_value(&k.p));
    o.insert("q".into(), Value::Array(k.q_indecs.iter().map(rat_vec_value).collect()));
    Value::Object(o)
}

fn base_value(b: &BaseGeometry) -> Value {
    let mut o = Map::new();
    match b {
        BaseGeometry::LogPoint => {
            o.insert("kind".into(), Value::from("log_point"));
        }
        BaseGeometry::P1 => {
            o.insert("kind".into(), Value::from("p1"));
        }
        BaseGeometry::P1xP1 => {
            o.insert("kind".into(), Value::from("p1xp1"));
        }
        BaseGeometry::Curve { genus, polarization_degree } => {
            o.insert("kind".into(), Value::from("curve"));
            o.insert("genus".into(), Value::from(*genus));
            o.insert("polarization_degree".into(), Value::from(*polarization_degree));
        }
    }
    Value::Object(o)
}

fn chart_value(c: &Chart) -> Value {
    let mut zs: Vec<u64> = c
        .zero_flags
        .iter()
        .map(|&pos| {
            let g = &c.kummer.p_indecs[pos];
            c.kummer
                .p
                .generators
                .iter()
                .position(|x| x == g)
                .expect("flagged indecomposable is a generator") as u64
        })
        .collect();
    zs.sort_unstable();
    let mut o = Map::new();
    o.insert(
        "pic_map".into(),
        Value::Array(c.pic_map.iter().map(|row| int_vec_value(row)).collect()),
    );
    o.insert("zero_sections".into(), Value::Array(zs.into_iter().map(Value::from).collect()));
    Value::Object(o)
}

fn term_value(mono: &IVec, coef: &Rat) -> Value {
    let mut o = Map::new();
    o.insert("coef".into(), rat_value(coef));
    o.insert("monomial".into(), int_vec_value(mono));
    Value::Object(o)
}

fn entry_value(p: &SectionPoly) -> Value {
    let mut terms: Vec<Value> = p.terms().map(|(m, c)| term_value(m, c)).collect();
    if terms.len() == 1 {
        terms.pop().expect("one term")
    } else {
        Value::Array(terms)
    }
}

fn matrix_value(m: &Mat) -> Value {
    let rows = (0..m.rows)
        .map(|i| Value::Array((0..m.cols).map(|j| entry_value(m.at(i, j))).collect()))
        .collect();
    Value::Array(rows)
}

/// The sheaf section of the wire format, reusable inside command output.
pub fn sheaf_value(f: &ParabolicSheaf) -> Value {
    let classes = f
        .classes
        .iter()
        .map(|cl| {
            let mut o = Map::new();
            o.insert("rep".into(), rat_vec_value(&cl.rep));
            o.insert(
                "summands".into(),
                Value::Array(cl.summands.iter().map(|s| int_vec_value(s)).collect()),
            );
            Value::Object(o)
        })
        .collect();
    let mut transitions = Vec::new();
    for (c, group) in f.transitions.iter().enumerate() {
        for (g, m) in group.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            let mut o = Map::new();
            o.insert("class".into(), Value::from(c as u64));
            o.insert("gen".into(), Value::from(g as u64));
            o.insert("matrix".into(), matrix_value(m));
            transitions.push(Value::Object(o));
        }
    }
    let mut o = Map::new();
    o.insert("classes".into(), Value::Array(classes));
    o.insert("transitions".into(), Value::Array(transitions));
    Value::Object(o)
}

fn generating_chart_value(c: &GeneratingChart) -> Value {
    let mut o = Map::new();
    o.insert("name".into(), Value::from(c.name.clone()));
    o.insert("p".into(), monoid_value(&c.source.p));
    o.insert("q".into(), Value::Array(c.source.q_indecs.iter().map(rat_vec_value).collect()));
    o.insert("transfer".into(), Value::Array(c.transfer.iter().map(rat_vec_value).collect()));
    Value::Object(o)
}

/// The whole document as a JSON value in canonical key order.
pub fn document_value(doc: &Document) -> Value {
    let mut top = Map::new();
    top.insert("version".into(), Value::from(DOC_VERSION));
    top.insert("extension".into(), extension_value(&doc.sheaf.chart.kummer));
    top.insert("base".into(), base_value(&doc.sheaf.chart.base));
    top.insert("chart".into(), chart_value(&doc.sheaf.chart));
    top.insert("sheaf".into(), sheaf_value(&doc.sheaf));
    if !doc.charts.is_empty() {
        top.insert(
            "generating_charts".into(),
            Value::Array(doc.charts.iter().map(generating_chart_value).collect()),
        );
    }
    Value::Object(top)
}

/// Serializes a document back to its canonical byte layout.
pub fn emit_document(doc: &Document) -> String {
    let mut out = serde_json::to_string_pretty(&document_value(doc)).expect("value serializes");
    out.push('\n');
    out
}

/// Polynomial wire form `{"coeffs": ["a/b", ...]}`, low degree first.
pub fn poly_value(p: &HilbertPoly) -> Value {
    let mut o = Map::new();
    o.insert("coeffs".into(), Value::Array(p.coeffs.iter().map(rat_value).collect()));
    Value::Object(o)
}

pub fn parse_poly(v: &Value, path: &str) -> Result<HilbertPoly> {
    let m = obj(v, path)?;
    check_keys(m, &["coeffs"], path)?;
    Ok(HilbertPoly::new(rat_vec(get(m, "coeffs", path)?, &format!("{path}.coeffs"))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sheaf::unit_twist;
    use crate::{rat, ratio};

    fn halving_tower(rank: usize, base: BaseGeometry, pic_map: Vec<IVec>) -> Chart {
        let p = MonoidPresentation::free(rank);
        let q = (0..rank)
            .map(|i| (0..rank).map(|j| ratio(i64::from(i == j), 2)).collect())
            .collect();
        let kummer = KummerExtension::new(p, q).unwrap();
        let flags = BTreeSet::from([0]);
        Chart::new(kummer, base, pic_map, &flags).unwrap()
    }

    fn sample_document() -> Document {
        let chart = halving_tower(1, BaseGeometry::P1, vec![vec![1]]);
        let sheaf = unit_twist(&chart, &[1]).unwrap();
        let source = chart.kummer.clone();
        let alt = GeneratingChart {
            name: "doubled".into(),
            source,
            transfer: vec![vec![rat(2)]],
        };
        Document { sheaf, charts: vec![alt] }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let doc = sample_document();
        let text = emit_document(&doc);
        let parsed = parse_document(&text).unwrap();
        assert_eq!(parsed.sheaf, doc.sheaf);
        assert_eq!(parsed.charts.len(), 1);
        assert_eq!(parsed.charts[0].name, "doubled");
        assert_eq!(emit_document(&parsed), text);
        assert!(validate_document(&text).is_empty());
    }

    #[test]
    fn zero_matrices_are_omitted_and_restored() {
        let chart = halving_tower(1, BaseGeometry::P1, vec![vec![1]]);
        let classes = vec![
            WeightClass { rep: vec![ratio(-1, 2)], summands: vec![vec![0]] },
            WeightClass { rep: vec![rat(0)], summands: vec![vec![0]] },
        ];
        let transitions = vec![vec![Mat::zero(1, 1)], vec![Mat::zero(1, 1)]];
        let sheaf = ParabolicSheaf::new(chart, classes, transitions).unwrap();
        let text = emit_document(&Document { sheaf: sheaf.clone(), charts: vec![] });
        assert!(!text.contains("matrix"));
        let parsed = parse_document(&text).unwrap();
        assert_eq!(parsed.sheaf, sheaf);
    }

    #[test]
    fn strict_parsing_rejects_malformed_input() {
        let doc = sample_document();
        let text = emit_document(&doc);

        let loose = text.replace("\"1/2\"", "\"2/4\"");
        assert!(parse_document(&loose).unwrap_err().to_string().contains("lowest terms"));

        let unknown = text.replace("\"version\": 1", "\"version\": 1, \"zz\": 0");
        assert!(parse_document(&unknown).unwrap_err().to_string().contains("unknown key"));

        let version = text.replace("\"version\": 1", "\"version\": 7");
        assert!(parse_document(&version)
            .unwrap_err()
            .to_string()
            .contains("unsupported document version 7"));

        assert!(parse_document("[1, 2]").unwrap_err().to_string().contains("expected an object"));
        assert!(parse_document("{").unwrap_err().to_string().contains("invalid JSON"));
    }

    #[test]
    fn duplicate_transitions_are_rejected() {
        let doc = sample_document();
        let mut v: Value = serde_json::from_str(&emit_document(&doc)).unwrap();
        let trans = v["sheaf"]["transitions"].as_array_mut().unwrap();
        let copy = trans[0].clone();
        trans.push(copy);
        let text = serde_json::to_string(&v).unwrap();
        assert!(parse_document(&text).unwrap_err().to_string().contains("duplicate matrix"));
    }

    #[test]
    fn missing_class_yields_one_diagnostic_naming_it() {
        let doc = sample_document();
        let mut v: Value = serde_json::from_str(&emit_document(&doc)).unwrap();
        let classes = v["sheaf"]["classes"].as_array_mut().unwrap();
        classes.remove(0);
        v["sheaf"]["transitions"] = Value::Array(vec![]);
        let text = serde_json::to_string(&v).unwrap();
        let diags = validate_document(&text);
        assert_eq!(diags.len(), 2, "{diags:?}");
        assert!(diags.iter().any(|d| d.contains("expected 2 weight classes")));
        assert!(diags.iter().any(|d| d.contains("missing weight class")));
    }

    #[test]
    fn flag_closure_violations_name_the_relation() {
        // p + q = 2r: flagging p alone cannot be consistent.
        let text = r#"{
  "version": 1,
  "extension": {
    "p": {"ambient_rank": 2, "generators": [[2,0],[1,1],[0,2]]},
    "q": [["2","0"],["1","1"],["0","2"]]
  },
  "base": {"kind": "p1"},
  "chart": {"pic_map": [[1,1]], "zero_sections": [0]},
  "sheaf": {"classes": [{"rep": ["0","0"], "summands": [[0]]}],
            "transitions": []}
}"#;
        let diags = validate_document(text);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].contains("not closed under relations"), "{}", diags[0]);
    }

    #[test]
    fn extension_steps_parse_both_forms() {
        let level: Value = serde_json::json!({"level": 4});
        match parse_extension_step(&level, "step").unwrap() {
            ExtensionStep::Level(4) => {}
            _ => panic!("expected level 4"),
        }
        let target: Value = serde_json::json!({"target_q": [["1/3"]]});
        match parse_extension_step(&target, "step").unwrap() {
            ExtensionStep::TargetQ(q) => assert_eq!(q, vec![vec![ratio(1, 3)]]),
            _ => panic!("expected target generators"),
        }
        let bad: Value = serde_json::json!({"levels": 4});
        assert!(parse_extension_step(&bad, "step").is_err());
    }

    #[test]
    fn polynomials_round_trip_through_wire_form() {
        let p = HilbertPoly::new(vec![ratio(-1, 2), rat(0), rat(3)]);
        let v = poly_value(&p);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"coeffs":["-1/2","0","3"]}"#);
        assert_eq!(parse_poly(&v, "poly").unwrap(), p);
    }
}
