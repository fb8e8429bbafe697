use super::render::{object_state, ObjectState};
use super::{Color, SceneSpec, ShapeKind};
use crate::error::{Error, Result};
use crate::types::LanguageSentence;

/// Closed vocabulary of the sentence grammar.
pub const VOCABULARY: [&str; 19] = [
    "the", "red", "green", "blue", "yellow", "white", "black", "square", "circle", "triangle", "on", "left",
    "right", "top", "bottom", "to", "of", "above", "below",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    LeftOf,
    RightOf,
    Above,
    Below,
}

/// Parsed form of a sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub color: Color,
    pub kind: ShapeKind,
    pub side: Option<Side>,
    pub relation: Option<(Relation, Color, ShapeKind)>,
}

/// Side word from the dominant offset axis against the frame midlines;
/// horizontal wins ties, the exact center has none.
pub fn side_of(cx: f64, cy: f64, width: f64, height: f64) -> Option<Side> {
    let dx = cx - width / 2.0;
    let dy = cy - height / 2.0;
    if dx == 0.0 && dy == 0.0 {
        None
    } else if dx.abs() >= dy.abs() {
        Some(if dx < 0.0 { Side::Left } else { Side::Right })
    } else {
        Some(if dy < 0.0 { Side::Top } else { Side::Bottom })
    }
}

fn relation_of(a: &ObjectState, b: &ObjectState) -> Option<Relation> {
    let dx = a.cx - b.cx;
    let dy = a.cy - b.cy;
    if dx == 0.0 && dy == 0.0 {
        None
    } else if dx.abs() >= dy.abs() {
        Some(if dx < 0.0 { Relation::LeftOf } else { Relation::RightOf })
    } else {
        Some(if dy < 0.0 { Relation::Above } else { Relation::Below })
    }
}

fn scene_objects(spec: &SceneSpec) -> Vec<ObjectState> {
    std::iter::once(object_state(spec, &spec.target, true, 0))
        .chain(spec.distractors.iter().map(|d| object_state(spec, d, false, 0)))
        .collect()
}

/// Describes the target by color, shape, side and its relation to the
/// nearest other object. When that sentence also fits another object,
/// farther reference objects are tried in order of distance.
pub fn describe(spec: &SceneSpec) -> LanguageSentence {
    let objects = scene_objects(spec);
    let target = objects[0];
    let (w, h) = (spec.frame_size.0 as f64, spec.frame_size.1 as f64);
    let mut head = vec!["the", target.color.word(), target.kind.word()];
    if let Some(side) = side_of(target.cx, target.cy, w, h) {
        head.extend(["on", "the"]);
        head.push(match side {
            Side::Left => "left",
            Side::Right => "right",
            Side::Top => "top",
            Side::Bottom => "bottom",
        });
    }
    let dist = |o: &ObjectState| (o.cx - target.cx).powi(2) + (o.cy - target.cy).powi(2);
    let mut others: Vec<&ObjectState> = objects[1..].iter().collect();
    // stable sort keeps the earlier distractor first on equal distance
    others.sort_by(|a, b| dist(a).total_cmp(&dist(b)));
    let sentence = |other: Option<&ObjectState>| {
        let mut tokens = head.clone();
        if let Some(other) = other {
            if let Some(rel) = relation_of(&target, other) {
                match rel {
                    Relation::LeftOf => tokens.extend(["to", "the", "left", "of"]),
                    Relation::RightOf => tokens.extend(["to", "the", "right", "of"]),
                    Relation::Above => tokens.push("above"),
                    Relation::Below => tokens.push("below"),
                }
                tokens.extend(["the", other.color.word(), other.kind.word()]);
            }
        }
        LanguageSentence::new(tokens.into_iter().map(str::to_owned).collect()).expect("grammar emits valid tokens")
    };
    let first = sentence(others.first().copied());
    if is_unique(spec, &first) {
        return first;
    }
    others
        .iter()
        .skip(1)
        .map(|o| sentence(Some(o)))
        .find(|s| is_unique(spec, s))
        .unwrap_or(first)
}

fn is_unique(spec: &SceneSpec, sentence: &LanguageSentence) -> bool {
    matching_objects(spec, sentence).is_ok_and(|m| m == [0])
}

fn color_word(s: &str) -> Option<Color> {
    Color::ALL.into_iter().find(|c| c.word() == s)
}

fn kind_word(s: &str) -> Option<ShapeKind> {
    ShapeKind::ALL.into_iter().find(|k| k.word() == s)
}

/// Parses a sentence produced by [`describe`].
pub fn parse_clause(sentence: &LanguageSentence) -> Result<Clause> {
    let t: Vec<&str> = sentence.tokens().iter().map(String::as_str).collect();
    let bad = || Error::Invalid(format!("sentence outside the grammar: {sentence}"));
    let mut i = 0;
    let noun = |i: &mut usize| -> Result<(Color, ShapeKind)> {
        if t.get(*i) != Some(&"the") {
            return Err(bad());
        }
        let c = t.get(*i + 1).and_then(|s| color_word(s)).ok_or_else(bad)?;
        let k = t.get(*i + 2).and_then(|s| kind_word(s)).ok_or_else(bad)?;
        *i += 3;
        Ok((c, k))
    };
    let (color, kind) = noun(&mut i)?;
    let mut side = None;
    if t.get(i) == Some(&"on") {
        if t.get(i + 1) != Some(&"the") {
            return Err(bad());
        }
        side = Some(match t.get(i + 2) {
            Some(&"left") => Side::Left,
            Some(&"right") => Side::Right,
            Some(&"top") => Side::Top,
            Some(&"bottom") => Side::Bottom,
            _ => return Err(bad()),
        });
        i += 3;
    }
    let mut relation = None;
    if i < t.len() {
        let rel = match t[i] {
            "to" => {
                let r = match (t.get(i + 1), t.get(i + 2), t.get(i + 3)) {
                    (Some(&"the"), Some(&"left"), Some(&"of")) => Relation::LeftOf,
                    (Some(&"the"), Some(&"right"), Some(&"of")) => Relation::RightOf,
                    _ => return Err(bad()),
                };
                i += 4;
                r
            }
            "above" => {
                i += 1;
                Relation::Above
            }
            "below" => {
                i += 1;
                Relation::Below
            }
            _ => return Err(bad()),
        };
        let (c, k) = noun(&mut i)?;
        relation = Some((rel, c, k));
    }
    if i != t.len() {
        return Err(bad());
    }
    Ok(Clause {
        color,
        kind,
        side,
        relation,
    })
}

/// Indices (0 = target, `i + 1` = distractor `i`) of every scene object
/// satisfying all clauses of `sentence` at the first frame. Side and
/// relation words are read loosely (any offset in that direction counts).
pub fn matching_objects(spec: &SceneSpec, sentence: &LanguageSentence) -> Result<Vec<usize>> {
    let clause = parse_clause(sentence)?;
    let objects = scene_objects(spec);
    let (w, h) = (spec.frame_size.0 as f64, spec.frame_size.1 as f64);
    let mut out = Vec::new();
    for (i, o) in objects.iter().enumerate() {
        if o.color != clause.color || o.kind != clause.kind {
            continue;
        }
        let side_ok = match clause.side {
            None => true,
            Some(Side::Left) => o.cx < w / 2.0,
            Some(Side::Right) => o.cx > w / 2.0,
            Some(Side::Top) => o.cy < h / 2.0,
            Some(Side::Bottom) => o.cy > h / 2.0,
        };
        let rel_ok = match clause.relation {
            None => true,
            Some((rel, c, k)) => objects.iter().enumerate().any(|(j, d)| {
                j != i
                    && d.color == c
                    && d.kind == k
                    && match rel {
                        Relation::LeftOf => o.cx < d.cx,
                        Relation::RightOf => o.cx > d.cx,
                        Relation::Above => o.cy < d.cy,
                        Relation::Below => o.cy > d.cy,
                    }
            }),
        };
        if side_ok && rel_ok {
            out.push(i);
        }
    }
    Ok(out)
}
