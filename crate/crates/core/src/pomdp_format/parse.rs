use super::{Located, ParseError, PomdpFileModel, ValueCriterion};

/// Tolerance for rows and start beliefs read from files.
pub const ROW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    pos: Pos,
}

fn tokenize<'a>(text: &'a str) -> (Vec<Token<'a>>, Pos) {
    let mut tokens = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut start: Option<(usize, Pos)> = None;
    let mut comment = false;
    let flush = |start: &mut Option<(usize, Pos)>, end: usize, tokens: &mut Vec<Token<'a>>| {
        if let Some((s, pos)) = start.take() {
            tokens.push(Token {
                text: &text[s..end],
                pos,
            });
        }
    };
    for (i, c) in text.char_indices() {
        if comment {
            if c == '\n' {
                comment = false;
            }
        } else if c == '#' {
            flush(&mut start, i, &mut tokens);
            comment = true;
        } else if c.is_whitespace() {
            flush(&mut start, i, &mut tokens);
        } else if c == ':' {
            flush(&mut start, i, &mut tokens);
            tokens.push(Token {
                text: &text[i..i + 1],
                pos: Pos { line, column },
            });
        } else if start.is_none() {
            start = Some((i, Pos { line, column }));
        }
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    flush(&mut start, text.len(), &mut tokens);
    (tokens, Pos { line, column })
}

const KEYWORDS: [&str; 9] = [
    "discount",
    "values",
    "states",
    "actions",
    "observations",
    "start",
    "T",
    "O",
    "R",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Space {
    State,
    Action,
    Observation,
}

impl Space {
    fn label(self) -> &'static str {
        match self {
            Space::State => "state",
            Space::Action => "action",
            Space::Observation => "observation",
        }
    }
}

/// Parsed file before its invariants are checked.
#[derive(Debug, Clone)]
pub(super) struct RawModel {
    pub discount: Option<(f64, Located)>,
    pub values: ValueCriterion,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub transition: Vec<f64>,
    pub observation: Vec<f64>,
    pub reward: Vec<f64>,
    // statement that last wrote each T[a][s] / Z[a][s'] row
    pub transition_rows: Vec<Option<Located>>,
    pub observation_rows: Vec<Option<Located>>,
    pub start: Option<(Vec<f64>, Located)>,
    pub end: Located,
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    at: usize,
    end: Pos,
    model: RawModel,
    allocated: bool,
}

fn syntax(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError::syntax(pos.line, pos.column, message)
}

fn semantic(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError::semantic(pos.line, pos.column, message)
}

fn located(pos: Pos) -> Located {
    Located {
        line: pos.line,
        column: pos.column,
    }
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let (tokens, end) = tokenize(text);
        Self {
            tokens,
            at: 0,
            end,
            model: RawModel {
                discount: None,
                values: ValueCriterion::Reward,
                states: Vec::new(),
                actions: Vec::new(),
                observations: Vec::new(),
                transition: Vec::new(),
                observation: Vec::new(),
                reward: Vec::new(),
                transition_rows: Vec::new(),
                observation_rows: Vec::new(),
                start: None,
                end: located(end),
            },
            allocated: false,
        }
    }

    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.at).copied()
    }

    fn peek_is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.text == text)
    }

    fn here(&self) -> Pos {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn next(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        let token = self
            .peek()
            .ok_or_else(|| syntax(self.end, format!("unexpected end of file, expected {what}")))?;
        self.at += 1;
        Ok(token)
    }

    fn expect_colon(&mut self) -> Result<(), ParseError> {
        let t = self.next("':'")?;
        if t.text != ":" {
            return Err(syntax(t.pos, format!("expected ':', found {:?}", t.text)));
        }
        Ok(())
    }

    fn statement_starts_at(&self, i: usize) -> bool {
        let Some(t) = self.tokens.get(i) else {
            return false;
        };
        let next_is = |k: usize, s: &str| self.tokens.get(i + k).is_some_and(|t| t.text == s);
        if !KEYWORDS.contains(&t.text) {
            return false;
        }
        next_is(1, ":") || (t.text == "start" && (next_is(1, "include") || next_is(1, "exclude")) && next_is(2, ":"))
    }

    /// Tokens up to the next statement or the end of input.
    fn rest_of_statement(&mut self) -> Vec<Token<'a>> {
        let mut out = Vec::new();
        while self.at < self.tokens.len() && !self.statement_starts_at(self.at) {
            out.push(self.tokens[self.at]);
            self.at += 1;
        }
        out
    }

    fn number(&mut self) -> Result<(f64, Pos), ParseError> {
        let t = self.next("a number")?;
        parse_number(t).map(|v| (v, t.pos))
    }

    fn probability(&mut self) -> Result<f64, ParseError> {
        let (v, pos) = self.number()?;
        if !(0.0..=1.0 + ROW_TOLERANCE).contains(&v) {
            return Err(semantic(pos, format!("probability {v} outside [0, 1]")));
        }
        Ok(v)
    }

    fn space(&self, space: Space) -> &[String] {
        match space {
            Space::State => &self.model.states,
            Space::Action => &self.model.actions,
            Space::Observation => &self.model.observations,
        }
    }

    fn resolve(&self, token: Token<'a>, space: Space) -> Result<Vec<usize>, ParseError> {
        let names = self.space(space);
        if token.text == "*" {
            return Ok((0..names.len()).collect());
        }
        resolve_one(names, token.text)
            .map(|i| vec![i])
            .ok_or_else(|| semantic(token.pos, format!("unknown {} {:?}", space.label(), token.text)))
    }

    fn identifier(&mut self, space: Space) -> Result<Vec<usize>, ParseError> {
        let t = self.next(space.label())?;
        if t.text == ":" {
            return Err(syntax(t.pos, format!("expected {}, found ':'", space.label())));
        }
        self.resolve(t, space)
    }

    fn dims(&self) -> (usize, usize, usize) {
        (
            self.model.states.len(),
            self.model.actions.len(),
            self.model.observations.len(),
        )
    }

    fn require_spaces(&mut self, pos: Pos, what: &str) -> Result<(), ParseError> {
        let (ns, na, no) = self.dims();
        if ns == 0 || na == 0 || no == 0 {
            return Err(semantic(
                pos,
                format!("{what} appears before states, actions and observations are declared"),
            ));
        }
        if !self.allocated {
            self.model.transition = vec![0.0; na * ns * ns];
            self.model.observation = vec![0.0; na * ns * no];
            self.model.reward = vec![0.0; na * ns * ns * no];
            self.model.transition_rows = vec![None; na * ns];
            self.model.observation_rows = vec![None; na * ns];
            self.allocated = true;
        }
        Ok(())
    }

    fn parse(mut self) -> Result<RawModel, ParseError> {
        while let Some(t) = self.peek() {
            if !self.statement_starts_at(self.at) {
                return Err(syntax(t.pos, format!("expected a statement, found {:?}", t.text)));
            }
            self.at += 1;
            match t.text {
                "discount" => {
                    self.expect_colon()?;
                    let (v, pos) = self.number()?;
                    self.model.discount = Some((v, located(pos)));
                }
                "values" => {
                    self.expect_colon()?;
                    let v = self.next("reward or cost")?;
                    self.model.values = match v.text {
                        "reward" => ValueCriterion::Reward,
                        "cost" => ValueCriterion::Cost,
                        other => {
                            return Err(syntax(v.pos, format!("expected reward or cost, found {other:?}")))
                        }
                    };
                }
                "states" | "actions" | "observations" => {
                    self.expect_colon()?;
                    self.declare(t)?;
                }
                "start" => self.start(t)?,
                "T" => {
                    self.expect_colon()?;
                    self.require_spaces(t.pos, "T:")?;
                    self.transition(t.pos)?;
                }
                "O" => {
                    self.expect_colon()?;
                    self.require_spaces(t.pos, "O:")?;
                    self.observation(t.pos)?;
                }
                "R" => {
                    self.expect_colon()?;
                    self.require_spaces(t.pos, "R:")?;
                    self.reward()?;
                }
                _ => unreachable!("keyword list"),
            }
        }
        Ok(self.model)
    }

    fn declare(&mut self, keyword: Token<'a>) -> Result<(), ParseError> {
        if self.allocated {
            return Err(semantic(
                keyword.pos,
                format!("{} declared after T:, O: or R: statements", keyword.text),
            ));
        }
        let items = self.rest_of_statement();
        let names: Vec<String> = match items.as_slice() {
            [] => {
                return Err(syntax(self.here(), format!("{} needs a count or a list of names", keyword.text)))
            }
            [single] if single.text.bytes().all(|b| b.is_ascii_digit()) => {
                let n: usize = single
                    .text
                    .parse()
                    .map_err(|_| semantic(single.pos, "count too large"))?;
                if n == 0 {
                    return Err(semantic(single.pos, format!("{} count must be positive", keyword.text)));
                }
                (0..n).map(|i| i.to_string()).collect()
            }
            list => {
                let mut names: Vec<String> = Vec::with_capacity(list.len());
                for t in list {
                    if t.text == "*" || t.text == ":" {
                        return Err(syntax(t.pos, format!("{:?} is not a valid name", t.text)));
                    }
                    if names.iter().any(|n| n == t.text) {
                        return Err(semantic(t.pos, format!("duplicate name {:?}", t.text)));
                    }
                    names.push(t.text.to_string());
                }
                names
            }
        };
        match keyword.text {
            "states" => self.model.states = names,
            "actions" => self.model.actions = names,
            _ => self.model.observations = names,
        }
        Ok(())
    }

    fn start(&mut self, keyword: Token<'a>) -> Result<(), ParseError> {
        let mode = match self.peek().map(|t| t.text) {
            Some("include") | Some("exclude") => Some(self.next("include")?.text),
            _ => None,
        };
        self.expect_colon()?;
        let ns = self.model.states.len();
        if ns == 0 {
            return Err(semantic(keyword.pos, "start appears before states are declared"));
        }
        let items = self.rest_of_statement();
        let first = *items
            .first()
            .ok_or_else(|| syntax(self.here(), "start needs a belief"))?;
        let belief = match mode {
            Some(mode) => {
                let mut chosen = vec![false; ns];
                for t in &items {
                    for i in self.resolve(*t, Space::State)? {
                        chosen[i] = true;
                    }
                }
                if mode == "exclude" {
                    chosen.iter_mut().for_each(|c| *c = !*c);
                }
                let count = chosen.iter().filter(|c| **c).count();
                if count == 0 {
                    return Err(semantic(first.pos, "start belief covers no states"));
                }
                chosen
                    .iter()
                    .map(|&c| if c { 1.0 / count as f64 } else { 0.0 })
                    .collect()
            }
            None if items.len() == 1 && first.text == "uniform" => vec![1.0 / ns as f64; ns],
            None if items.len() == 1 && resolve_one(&self.model.states, first.text).is_some() => {
                let mut b = vec![0.0; ns];
                b[resolve_one(&self.model.states, first.text).expect("checked")] = 1.0;
                b
            }
            None => {
                if items.len() != ns {
                    return Err(semantic(
                        first.pos,
                        format!("start lists {} probabilities for {ns} states", items.len()),
                    ));
                }
                items.iter().map(|t| parse_number(*t)).collect::<Result<_, _>>()?
            }
        };
        self.model.start = Some((belief, located(first.pos)));
        Ok(())
    }

    // Reads `count` probabilities, or `count` uniform entries for `uniform`.
    fn prob_row(&mut self, count: usize) -> Result<Vec<f64>, ParseError> {
        if self.peek_is("uniform") {
            self.at += 1;
            return Ok(vec![1.0 / count as f64; count]);
        }
        (0..count).map(|_| self.probability()).collect()
    }

    fn transition(&mut self, pos: Pos) -> Result<(), ParseError> {
        let (ns, _, _) = self.dims();
        let actions = self.identifier(Space::Action)?;
        let mut writes: Vec<(usize, usize, Vec<(usize, f64)>)> = Vec::new();
        if self.peek_is(":") {
            self.at += 1;
            let starts = self.identifier(Space::State)?;
            if self.peek_is(":") {
                self.at += 1;
                let ends = self.identifier(Space::State)?;
                let p = self.probability()?;
                for &a in &actions {
                    for &s in &starts {
                        writes.push((a, s, ends.iter().map(|&e| (e, p)).collect()));
                    }
                }
            } else {
                let row = self.prob_row(ns)?;
                for &a in &actions {
                    for &s in &starts {
                        writes.push((a, s, row.iter().copied().enumerate().collect()));
                    }
                }
            }
        } else if self.peek_is("identity") {
            self.at += 1;
            for &a in &actions {
                for s in 0..ns {
                    writes.push((a, s, (0..ns).map(|e| (e, f64::from(u8::from(e == s)))).collect()));
                }
            }
        } else {
            let rows: Vec<Vec<f64>> = if self.peek_is("uniform") {
                self.at += 1;
                vec![vec![1.0 / ns as f64; ns]; ns]
            } else {
                (0..ns).map(|_| self.prob_row_numbers(ns)).collect::<Result<_, _>>()?
            };
            for &a in &actions {
                for (s, row) in rows.iter().enumerate() {
                    writes.push((a, s, row.iter().copied().enumerate().collect()));
                }
            }
        }
        for (a, s, entries) in writes {
            for (e, p) in entries {
                self.model.transition[(a * ns + s) * ns + e] = p;
            }
            self.model.transition_rows[a * ns + s] = Some(located(pos));
        }
        Ok(())
    }

    fn prob_row_numbers(&mut self, count: usize) -> Result<Vec<f64>, ParseError> {
        (0..count).map(|_| self.probability()).collect()
    }

    fn observation(&mut self, pos: Pos) -> Result<(), ParseError> {
        let (ns, _, no) = self.dims();
        let actions = self.identifier(Space::Action)?;
        let mut writes: Vec<(usize, usize, Vec<(usize, f64)>)> = Vec::new();
        if self.peek_is(":") {
            self.at += 1;
            let ends = self.identifier(Space::State)?;
            if self.peek_is(":") {
                self.at += 1;
                let observations = self.identifier(Space::Observation)?;
                let p = self.probability()?;
                for &a in &actions {
                    for &e in &ends {
                        writes.push((a, e, observations.iter().map(|&o| (o, p)).collect()));
                    }
                }
            } else {
                let row = self.prob_row(no)?;
                for &a in &actions {
                    for &e in &ends {
                        writes.push((a, e, row.iter().copied().enumerate().collect()));
                    }
                }
            }
        } else {
            let rows: Vec<Vec<f64>> = if self.peek_is("uniform") {
                self.at += 1;
                vec![vec![1.0 / no as f64; no]; ns]
            } else {
                (0..ns).map(|_| self.prob_row_numbers(no)).collect::<Result<_, _>>()?
            };
            for &a in &actions {
                for (e, row) in rows.iter().enumerate() {
                    writes.push((a, e, row.iter().copied().enumerate().collect()));
                }
            }
        }
        for (a, e, entries) in writes {
            for (o, p) in entries {
                self.model.observation[(a * ns + e) * no + o] = p;
            }
            self.model.observation_rows[a * ns + e] = Some(located(pos));
        }
        Ok(())
    }

    fn reward(&mut self) -> Result<(), ParseError> {
        let (ns, _, no) = self.dims();
        let actions = self.identifier(Space::Action)?;
        if !self.peek_is(":") {
            return Err(syntax(self.here(), "R: needs at least an action and a start state"));
        }
        self.at += 1;
        let starts = self.identifier(Space::State)?;
        // value[e][o] for the chosen end states and observations
        let mut cells: Vec<(usize, usize, f64)> = Vec::new();
        if self.peek_is(":") {
            self.at += 1;
            let ends = self.identifier(Space::State)?;
            if self.peek_is(":") {
                self.at += 1;
                let observations = self.identifier(Space::Observation)?;
                let (v, _) = self.number()?;
                for &e in &ends {
                    for &o in &observations {
                        cells.push((e, o, v));
                    }
                }
            } else {
                let row: Vec<f64> = (0..no).map(|_| self.number().map(|(v, _)| v)).collect::<Result<_, _>>()?;
                for &e in &ends {
                    for (o, &v) in row.iter().enumerate() {
                        cells.push((e, o, v));
                    }
                }
            }
        } else {
            for e in 0..ns {
                for o in 0..no {
                    let (v, _) = self.number()?;
                    cells.push((e, o, v));
                }
            }
        }
        for &a in &actions {
            for &s in &starts {
                for &(e, o, v) in &cells {
                    self.model.reward[((a * ns + s) * ns + e) * no + o] = v;
                }
            }
        }
        Ok(())
    }
}

fn parse_number(t: Token<'_>) -> Result<f64, ParseError> {
    match t.text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(syntax(t.pos, format!("expected a number, found {:?}", t.text))),
    }
}

fn resolve_one(names: &[String], text: &str) -> Option<usize> {
    if let Some(i) = names.iter().position(|n| n == text) {
        return Some(i);
    }
    if text.bytes().all(|b| b.is_ascii_digit()) {
        return text.parse::<usize>().ok().filter(|&i| i < names.len());
    }
    None
}

pub(super) fn parse_raw(text: &str) -> Result<RawModel, ParseError> {
    let parser = Parser::new(text);
    let end = parser.end;
    let model = parser.parse()?;
    let missing = [
        ("states", model.states.is_empty()),
        ("actions", model.actions.is_empty()),
        ("observations", model.observations.is_empty()),
    ];
    if let Some((what, _)) = missing.iter().find(|(_, m)| *m) {
        return Err(semantic(end, format!("missing {what} declaration")));
    }
    let mut model = model;
    if model.transition.is_empty() {
        // spaces declared but no T/O/R statements
        let (ns, na, no) = (model.states.len(), model.actions.len(), model.observations.len());
        model.transition = vec![0.0; na * ns * ns];
        model.observation = vec![0.0; na * ns * no];
        model.reward = vec![0.0; na * ns * ns * no];
        model.transition_rows = vec![None; na * ns];
        model.observation_rows = vec![None; na * ns];
    }
    Ok(model)
}

/// Named invariant check over a parsed file.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub outcome: Result<(), ParseError>,
}

impl RawModel {
    pub(super) fn checks(&self) -> Vec<Check> {
        vec![
            Check {
                name: "discount",
                outcome: self.check_discount(),
            },
            Check {
                name: "transition rows",
                outcome: self.check_rows(true),
            },
            Check {
                name: "observation rows",
                outcome: self.check_rows(false),
            },
            Check {
                name: "start belief",
                outcome: self.check_start(),
            },
        ]
    }

    fn check_discount(&self) -> Result<(), ParseError> {
        match self.discount {
            None => Err(ParseError::semantic(self.end.line, self.end.column, "missing discount")),
            Some((g, at)) if !(0.0..1.0).contains(&g) => Err(ParseError::semantic(
                at.line,
                at.column,
                format!("discount {g} outside [0, 1)"),
            )),
            Some(_) => Ok(()),
        }
    }

    fn check_rows(&self, transition: bool) -> Result<(), ParseError> {
        let (ns, no) = (self.states.len(), self.observations.len());
        let (table, width, origins, label, row_space) = if transition {
            (&self.transition, ns, &self.transition_rows, "T", "start state")
        } else {
            (&self.observation, no, &self.observation_rows, "O", "end state")
        };
        for (a, action) in self.actions.iter().enumerate() {
            for (s, state) in self.states.iter().enumerate() {
                let row = &table[(a * ns + s) * width..(a * ns + s + 1) * width];
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    let at = origins[a * ns + s].unwrap_or(self.end);
                    return Err(ParseError::semantic(
                        at.line,
                        at.column,
                        format!("{label} row for action {action:?}, {row_space} {state:?} sums to {sum}"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_start(&self) -> Result<(), ParseError> {
        let Some((belief, at)) = &self.start else {
            return Ok(());
        };
        if let Some(p) = belief.iter().find(|p| **p < 0.0) {
            return Err(ParseError::semantic(at.line, at.column, format!("negative start probability {p}")));
        }
        let sum: f64 = belief.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(ParseError::semantic(at.line, at.column, format!("start belief sums to {sum}")));
        }
        Ok(())
    }

    pub(super) fn into_model(self) -> PomdpFileModel {
        let (ns, na, no) = (self.states.len(), self.actions.len(), self.observations.len());
        let sign = match self.values {
            ValueCriterion::Reward => 1.0,
            ValueCriterion::Cost => -1.0,
        };
        let transition = (0..na)
            .map(|a| (0..ns).map(|s| self.transition[(a * ns + s) * ns..][..ns].to_vec()).collect())
            .collect();
        let observation = (0..na)
            .map(|a| (0..ns).map(|e| self.observation[(a * ns + e) * no..][..no].to_vec()).collect())
            .collect();
        let reward = (0..na)
            .map(|a| {
                (0..ns)
                    .map(|s| {
                        (0..ns)
                            .map(|e| {
                                self.reward[((a * ns + s) * ns + e) * no..][..no]
                                    .iter()
                                    .map(|v| sign * v)
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        PomdpFileModel {
            discount: self.discount.map_or(0.0, |(g, _)| g),
            values: self.values,
            states: self.states,
            actions: self.actions,
            observations: self.observations,
            transition,
            observation,
            reward,
            start: self.start.map(|(b, _)| b),
        }
    }
}
