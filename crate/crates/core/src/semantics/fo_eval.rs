use super::*;
use crate::encode::fo::{Fo, Rel};

/// A finite first-order structure over the encoding vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoStructure {
    pub num_locs: u32,
    pub ints: IntSlice,
    pub constants: BTreeMap<String, Value>,
    pub field_sorts: Vec<Sort>,
    /// `fields[i][l]` is `m_i(l)`, including `l = 0`.
    pub fields: Vec<Vec<Value>>,
    pub relations: BTreeMap<Rel, BTreeSet<Vec<Value>>>,
}

impl FoStructure {
    /// The structure `M_fo` corresponding to a determined-heap structure:
    /// `P_fo` holds on tuples with a heaplet and `P_eta(d, l)` on its members.
    /// Fields of null are the sort default.
    pub fn from_heap(m: &HeapStructure) -> FoStructure {
        let fields = (0..m.field_sorts.len())
            .map(|i| {
                (0..m.num_locs)
                    .map(|l| m.field(l, i).unwrap_or(Value::default_of(m.field_sorts[i])))
                    .collect()
            })
            .collect();
        let mut relations = BTreeMap::new();
        for (p, interp) in &m.preds {
            let mut fo = BTreeSet::new();
            let mut eta = BTreeSet::new();
            for (args, h) in interp {
                fo.insert(args.clone());
                for l in h.locs() {
                    let mut t = args.clone();
                    t.push(Value::Loc(l));
                    eta.insert(t);
                }
            }
            relations.insert(Rel::fo(p), fo);
            relations.insert(Rel::eta(p), eta);
        }
        let mut constants = m.constants.clone();
        constants.insert(NIL.to_string(), NULL);
        FoStructure { num_locs: m.num_locs, ints: m.ints, constants, field_sorts: m.field_sorts.clone(), fields, relations }
    }

    fn term(&self, env: &Env, t: &Term) -> Result<Value, SemanticsError> {
        Ok(match t {
            Term::Int(n) => Value::Int(*n),
            Term::Const(s) => {
                *self.constants.get(&s.name).ok_or_else(|| SemanticsError::UnknownConstant(s.name.clone()))?
            }
            Term::Var(s) => lookup(env, &s.name).ok_or_else(|| SemanticsError::UnboundVariable(s.name.clone()))?,
            Term::Add(a, b) => match (self.term(env, a)?, self.term(env, b)?) {
                (Value::Int(x), Value::Int(y)) => Value::Int(x.wrapping_add(y)),
                _ => return Err(SemanticsError::IllFormed(format!("non-integer operand in `{t}`"))),
            },
            Term::Field { index, base, .. } => match self.term(env, base)? {
                Value::Loc(l) => *self
                    .fields
                    .get(*index)
                    .and_then(|f| f.get(l as usize))
                    .ok_or_else(|| SemanticsError::IllFormed(format!("field m_{} undefined at {l}", index + 1)))?,
                Value::Int(_) => return Err(SemanticsError::IllFormed("field of an integer".into())),
            },
        })
    }

    fn domain(&self, sort: Sort) -> Result<Vec<Value>, SemanticsError> {
        match sort {
            Sort::Loc => Ok((0..self.num_locs).map(Value::Loc).collect()),
            Sort::Int if self.ints.exhaustive => Ok(self.ints.values().map(Value::Int).collect()),
            Sort::Int => Err(SemanticsError::NonExhaustiveInts),
        }
    }

    fn eval(&self, env: &mut Env, f: &Fo) -> Result<bool, SemanticsError> {
        Ok(match f {
            Fo::True => true,
            Fo::False => false,
            Fo::Eq(a, b) => self.term(env, a)? == self.term(env, b)?,
            Fo::Lt(a, b) => match (self.term(env, a)?, self.term(env, b)?) {
                (Value::Int(x), Value::Int(y)) => x < y,
                _ => return Err(SemanticsError::IllFormed("`<` on locations".into())),
            },
            Fo::Rel(r, ts) => {
                let args = ts.iter().map(|t| self.term(env, t)).collect::<Result<Vec<_>, _>>()?;
                match self.relations.get(r) {
                    Some(set) => set.contains(&args),
                    None => false,
                }
            }
            Fo::Not(a) => !self.eval(env, a)?,
            Fo::And(v) => {
                for c in v {
                    if !self.eval(env, c)? {
                        return Ok(false);
                    }
                }
                true
            }
            Fo::Or(v) => {
                for c in v {
                    if self.eval(env, c)? {
                        return Ok(true);
                    }
                }
                false
            }
            Fo::Implies(a, b) => !self.eval(env, a)? || self.eval(env, b)?,
            Fo::Iff(a, b) => self.eval(env, a)? == self.eval(env, b)?,
            Fo::Forall(vs, b) | Fo::Exists(vs, b) => {
                let is_ex = matches!(f, Fo::Exists(..));
                self.quant(env, vs, is_ex, b)?
            }
        })
    }

    fn quant(&self, env: &mut Env, vs: &[crate::sl::Symbol], is_ex: bool, body: &Fo) -> Result<bool, SemanticsError> {
        let Some((v, rest)) = vs.split_first() else {
            return self.eval(env, body);
        };
        for d in self.domain(v.sort)? {
            env.push((v.name.clone(), d));
            let r = self.quant(env, rest, is_ex, body);
            env.pop();
            if r? == is_ex {
                return Ok(is_ex);
            }
        }
        Ok(!is_ex)
    }
}

/// `M_fo, v |= f`.
pub fn eval_fo(m: &FoStructure, env: &Env, f: &Fo) -> Result<bool, SemanticsError> {
    let mut env = env.clone();
    m.eval(&mut env, f)
}

/// `[[phi]]`: the locations `l` with `M_fo, v[x* := l] |= eta`. May include
/// null, in which case no heaplet corresponds.
pub fn denote_heaplet(m: &FoStructure, env: &Env, eta: &Fo) -> Result<Vec<u32>, SemanticsError> {
    let x = crate::encode::fo::xstar().name;
    let mut env = env.clone();
    let mut out = vec![];
    for l in 0..m.num_locs {
        env.push((x.clone(), Value::Loc(l)));
        let r = m.eval(&mut env, eta);
        env.pop();
        if r? {
            out.push(l);
        }
    }
    Ok(out)
}
