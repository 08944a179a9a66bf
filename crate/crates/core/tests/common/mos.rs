//! Flat multi-object-search oracle over plain tuples, written from the domain
//! rules without the factored models.

use pomdp_core::domains::MosAction;
use pomdp_core::oopomdp::{AttrValue, OOObservation, OOState, ObjectObservation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rules {
    pub width: i64,
    pub height: i64,
    pub fov_degrees: f64,
    pub range: f64,
    pub false_negative: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatState {
    /// x, y, heading index (east = 0, counter-clockwise), attempted find
    pub robot: (i64, i64, i64, bool),
    /// x, y, found
    pub targets: Vec<(i64, i64, bool)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatObservation {
    pub robot: (i64, i64, i64),
    pub targets: Vec<Option<(i64, i64)>>,
}

fn cell(v: Option<&AttrValue>) -> (i64, i64) {
    match v {
        Some(AttrValue::Cell(x, y)) => (*x, *y),
        other => panic!("expected a cell, got {other:?}"),
    }
}

pub fn decode_state(s: &OOState) -> FlatState {
    let mut robot = None;
    let mut targets = Vec::new();
    for (id, obj) in s.iter() {
        if id == 0 {
            let (x, y) = cell(obj.get("pose"));
            let h = match obj.get("heading") {
                Some(AttrValue::Int(h)) => *h,
                other => panic!("{other:?}"),
            };
            let att = matches!(obj.get("attempted_find"), Some(AttrValue::Bool(true)));
            robot = Some((x, y, h, att));
        } else {
            let (x, y) = cell(obj.get("pos"));
            targets.push((x, y, matches!(obj.get("found"), Some(AttrValue::Bool(true)))));
        }
    }
    FlatState {
        robot: robot.expect("robot present"),
        targets,
    }
}

pub fn decode_observation(o: &OOObservation) -> FlatObservation {
    let mut robot = None;
    let mut targets = Vec::new();
    for (id, obs) in o.iter() {
        let attrs = match obs {
            ObjectObservation::Null => None,
            ObjectObservation::Detected(attrs) => Some(attrs),
        };
        let find = |name: &str| attrs.and_then(|a| a.iter().find(|(n, _)| &**n == name).map(|(_, v)| v));
        if id == 0 {
            let (x, y) = cell(find("pose"));
            let h = match find("heading") {
                Some(AttrValue::Int(h)) => *h,
                other => panic!("{other:?}"),
            };
            robot = Some((x, y, h));
        } else {
            targets.push(attrs.map(|_| cell(find("pos"))));
        }
    }
    FlatObservation {
        robot: robot.expect("robot observation"),
        targets,
    }
}

impl Rules {
    /// Containment by polar angle and distance.
    pub fn in_fan(&self, robot: (i64, i64, i64), c: (i64, i64)) -> bool {
        let (dx, dy) = ((c.0 - robot.0) as f64, (c.1 - robot.1) as f64);
        if dx == 0.0 && dy == 0.0 {
            return true;
        }
        if dx.hypot(dy) > self.range + 1e-9 {
            return false;
        }
        let heading = robot.2 as f64 * std::f64::consts::FRAC_PI_2;
        let mut diff = (dy.atan2(dx) - heading).abs() % std::f64::consts::TAU;
        if diff > std::f64::consts::PI {
            diff = std::f64::consts::TAU - diff;
        }
        diff <= self.fov_degrees.to_radians() / 2.0 + 1e-9
    }

    pub fn step(&self, robot: (i64, i64, i64, bool), a: MosAction) -> (i64, i64, i64, bool) {
        let (x, y, h, _) = robot;
        let (hx, hy) = [(1, 0), (0, 1), (-1, 0), (0, -1)][h.rem_euclid(4) as usize];
        let go = |sign: i64| {
            let (nx, ny) = (x + sign * hx, y + sign * hy);
            if (0..self.width).contains(&nx) && (0..self.height).contains(&ny) {
                (nx, ny)
            } else {
                (x, y)
            }
        };
        let find = a == MosAction::Find;
        match a {
            MosAction::Forward => {
                let (nx, ny) = go(1);
                (nx, ny, h, find)
            }
            MosAction::Back => {
                let (nx, ny) = go(-1);
                (nx, ny, h, find)
            }
            MosAction::TurnLeft => (x, y, (h + 1).rem_euclid(4), find),
            MosAction::TurnRight => (x, y, (h + 3).rem_euclid(4), find),
            MosAction::Look | MosAction::Find => (x, y, h, find),
        }
    }

    pub fn transition(&self, s: &FlatState, a: MosAction, next: &FlatState) -> f64 {
        if next.robot != self.step(s.robot, a) {
            return 0.0;
        }
        let pose = (s.robot.0, s.robot.1, s.robot.2);
        for (t, n) in s.targets.iter().zip(&next.targets) {
            let found = t.2 || (a == MosAction::Find && self.in_fan(pose, (t.0, t.1)));
            if (n.0, n.1) != (t.0, t.1) || n.2 != found {
                return 0.0;
            }
        }
        1.0
    }

    pub fn observation(&self, o: &FlatObservation, next: &FlatState, a: MosAction) -> f64 {
        let pose = (next.robot.0, next.robot.1, next.robot.2);
        if o.robot != pose {
            return 0.0;
        }
        let mut p = 1.0;
        for (t, seen) in next.targets.iter().zip(&o.targets) {
            let visible = a == MosAction::Look && self.in_fan(pose, (t.0, t.1));
            p *= match (visible, seen) {
                (false, None) => 1.0,
                (false, Some(_)) => 0.0,
                (true, None) => self.false_negative,
                (true, Some(c)) if *c == (t.0, t.1) => 1.0 - self.false_negative,
                (true, Some(_)) => 0.0,
            };
        }
        p
    }
}
