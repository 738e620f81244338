use std::path::PathBuf;

use clap::ValueEnum;
use infonomics_core::{EventSet, PartitionModel};
use serde_json::{json, Value};

use super::{label_index, lookup, with_field};
use crate::error::CliError;
use crate::model::{labels, read_file, Field, PartitionFile};
use crate::output::{fields, table, Report};
use crate::Ctx;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Partition model file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    op: Op,
    /// Comma-separated state labels.
    #[arg(long)]
    event: Option<String>,
    /// Agent name or 0-based index.
    #[arg(long)]
    agent: Option<String>,
    /// State label.
    #[arg(long)]
    state: Option<String>,
    /// Belief threshold for p-belief operators.
    #[arg(long)]
    p: Option<String>,
    #[arg(long, default_value_t = 100)]
    rounds: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Op {
    /// Each agent's knowledge of the event, and everyone's.
    K,
    /// Common knowledge of the event.
    Ck,
    Meet,
    /// Whether the event is evident.
    Evident,
    /// Each agent's posterior of the event at a state.
    Posterior,
    /// States where an agent assigns the event probability at least p.
    Pbelief,
    /// Common p-belief.
    Cpbelief,
    /// Posteriors at a state and whether they are common knowledge.
    Agree,
    /// Posterior announcements until they stop changing.
    Dialogue,
}

pub fn build<T: Field>(ctx: &Ctx, f: &PartitionFile) -> Result<PartitionModel<T>, CliError> {
    let states = labels(&f.states);
    let prior = match &f.prior {
        Some(p) => ctx.norm.probs("prior", p)?,
        None => vec![T::ratio(1, states.len() as i64); states.len()],
    };
    let mut agents = Vec::new();
    let mut parts = Vec::new();
    for (name, blocks) in &f.partitions {
        agents.push(name.clone());
        let b = blocks
            .iter()
            .map(|blk| blk.iter().map(|l| label_index("state", &states, l)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        parts.push(b);
    }
    Ok(PartitionModel::new(states, prior, agents, parts)?)
}

fn names(m: &PartitionModel<impl Field>, e: &EventSet) -> Vec<String> {
    e.iter().map(|s| m.states()[s].clone()).collect()
}

fn set_text(v: &[String]) -> String {
    format!("{{{}}}", v.join(","))
}

fn need<'a>(v: &'a Option<String>, flag: &str) -> Result<&'a str, CliError> {
    v.as_deref().ok_or_else(|| CliError::Usage(format!("this operation needs --{flag}")))
}

pub fn run(ctx: &Ctx, a: Args) -> Result<Report, CliError> {
    let f: PartitionFile = read_file(&a.model)?;
    with_field!(ctx, go, ctx, &f, &a)
}

fn go<T: Field>(ctx: &Ctx, f: &PartitionFile, a: &Args) -> Result<Report, CliError> {
    let m: PartitionModel<T> = build(ctx, f)?;
    let states = m.states().to_vec();
    let agents = m.agents().to_vec();
    let event = || -> Result<EventSet, CliError> {
        let text = need(&a.event, "event")?;
        let idx = text
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| lookup_label(&states, s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(m.event(idx)?)
    };
    let state = || -> Result<usize, CliError> { lookup_label(&states, need(&a.state, "state")?) };
    let agent = || -> Result<usize, CliError> { lookup("agent", &agents, need(&a.agent, "agent")?) };
    let p = || -> Result<T, CliError> {
        let text = need(&a.p, "p")?;
        T::parse(text).ok_or_else(|| CliError::Usage(format!("--p: '{text}' is not a number")))
    };

    match a.op {
        Op::K => {
            let e = event()?;
            let mut rows = Vec::new();
            let mut rec = serde_json::Map::new();
            for (i, name) in agents.iter().enumerate() {
                let k = names(&m, &m.knows(i, &e)?);
                rows.push(vec![format!("K[{name}]"), set_text(&k)]);
                rec.insert(name.clone(), json!(k));
            }
            let all = names(&m, &m.mutual_knowledge(&e)?);
            rows.push(vec!["K (everyone)".into(), set_text(&all)]);
            let record = json!({"op": "k", "event": names(&m, &e), "agents": rec, "everyone": all});
            Ok(Report::new(record, table(&["operator", "states"], &rows)))
        }
        Op::Ck => {
            let e = event()?;
            let ck = names(&m, &m.common_knowledge_iterated(&e)?);
            let mut pairs = vec![("common knowledge", set_text(&ck))];
            let mut record = json!({"op": "ck", "event": names(&m, &e), "common_knowledge": ck});
            if a.state.is_some() {
                let s = state()?;
                let via_meet = m.common_knowledge_via_meet(&e, s)?;
                let via_evident = m.common_knowledge_via_evident(&e, s)?;
                let iterated = m.common_knowledge_iterated(&e)?.contains(s);
                if via_meet != iterated || via_evident != iterated {
                    return Err(CliError::Core(infonomics_core::Error::Numerical(
                        "common-knowledge characterizations disagree".into(),
                    )));
                }
                pairs.push(("at state", states[s].clone()));
                pairs.push(("holds", iterated.to_string()));
                record["state"] = json!(states[s]);
                record["holds"] = json!(iterated);
            }
            Ok(Report::new(record, fields(&pairs)))
        }
        Op::Meet => {
            let blocks: Vec<Vec<String>> =
                m.meet().iter().map(|b| b.iter().map(|&s| states[s].clone()).collect()).collect();
            let text = blocks.iter().map(|b| set_text(b)).collect::<Vec<_>>().join(" ");
            Ok(Report::new(json!({"op": "meet", "blocks": blocks}), format!("meet  {text}")))
        }
        Op::Evident => {
            let e = event()?;
            let ev = m.is_evident(&e)?;
            Ok(Report::new(
                json!({"op": "evident", "event": names(&m, &e), "evident": ev}),
                fields(&[("event", set_text(&names(&m, &e))), ("evident", ev.to_string())]),
            ))
        }
        Op::Posterior => {
            let (e, s) = (event()?, state()?);
            let mut rows = Vec::new();
            let mut rec = serde_json::Map::new();
            for (i, name) in agents.iter().enumerate() {
                let v = m.event_posterior(i, &e, s)?;
                rows.push(vec![name.clone(), v.to_string()]);
                rec.insert(name.clone(), v.json());
            }
            Ok(Report::new(
                json!({"op": "posterior", "event": names(&m, &e), "state": states[s], "posteriors": rec}),
                table(&["agent", "posterior"], &rows),
            ))
        }
        Op::Pbelief => {
            let (e, i, p) = (event()?, agent()?, p()?);
            let b = names(&m, &m.p_belief(i, &e, &p)?);
            Ok(Report::new(
                json!({"op": "pbelief", "agent": agents[i], "p": p.json(), "states": b}),
                fields(&[("agent", agents[i].clone()), ("p", p.to_string()), ("states", set_text(&b))]),
            ))
        }
        Op::Cpbelief => {
            let (e, p) = (event()?, p()?);
            let b = names(&m, &m.common_p_belief(&e, &p)?);
            Ok(Report::new(
                json!({"op": "cpbelief", "p": p.json(), "states": b}),
                fields(&[("p", p.to_string()), ("common p-belief", set_text(&b))]),
            ))
        }
        Op::Agree => {
            let (e, s) = (event()?, state()?);
            let r = m.agreement_check(&e, s)?;
            let rows: Vec<Vec<String>> =
                agents.iter().zip(&r.posteriors).map(|(n, v)| vec![n.clone(), v.to_string()]).collect();
            let text = format!(
                "{}\n{}",
                table(&["agent", "posterior"], &rows),
                fields(&[
                    ("common knowledge", r.common_knowledge.to_string()),
                    ("violation", r.violation.to_string())
                ])
            );
            let post: Vec<Value> = r.posteriors.iter().map(Field::json).collect();
            Ok(Report::new(
                json!({"op": "agree", "state": states[s], "posteriors": post,
                       "common_knowledge": r.common_knowledge, "violation": r.violation}),
                text,
            ))
        }
        Op::Dialogue => {
            let (e, s) = (event()?, state()?);
            let t = m.gp_dialogue(&e, s, a.rounds)?;
            let mut headers = vec!["round".to_string()];
            headers.extend(agents.iter().cloned());
            let rows: Vec<Vec<String>> = t
                .iter()
                .enumerate()
                .map(|(k, r)| std::iter::once((k + 1).to_string()).chain(r.iter().map(|v| v.to_string())).collect())
                .collect();
            let rec: Vec<Value> = t.iter().map(|r| Value::Array(r.iter().map(Field::json).collect())).collect();
            let h: Vec<&str> = headers.iter().map(String::as_str).collect();
            Ok(Report::new(json!({"op": "dialogue", "state": states[s], "rounds": rec}), table(&h, &rows)))
        }
    }
}

fn lookup_label(states: &[String], s: &str) -> Result<usize, CliError> {
    states
        .iter()
        .position(|n| n == s)
        .ok_or_else(|| CliError::Validation(format!("unknown state '{s}'")))
}
