//! Instance files and allocation dumps.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use nash_stream_core::{Allocation, Instance, Item};
use serde::{Deserialize, Serialize};

/// How numbers are written into instance files. Both forms are always accepted on read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum NumberFormat {
    #[default]
    Double,
    String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Number {
    Double(f64),
    Text(String),
}

impl Number {
    fn encode(x: f64, format: NumberFormat) -> Self {
        match format {
            NumberFormat::Double => Number::Double(x),
            // Debug formatting is the shortest string that parses back to the same bits.
            NumberFormat::String => Number::Text(format!("{x:?}")),
        }
    }

    fn decode(&self) -> Result<f64> {
        match self {
            Number::Double(x) => Ok(*x),
            Number::Text(s) => s.trim().parse().with_context(|| format!("not a number: {s:?}")),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ItemFile {
    supply: Number,
    values: Vec<Number>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    num_agents: usize,
    items: Vec<ItemFile>,
}

pub fn instance_to_json(inst: &Instance, format: NumberFormat) -> Result<String> {
    let file = InstanceFile {
        num_agents: inst.num_agents(),
        items: inst
            .items()
            .iter()
            .map(|item| ItemFile {
                supply: Number::encode(item.supply, format),
                values: item.values.iter().map(|&v| Number::encode(v, format)).collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file)?;
    out.push('\n');
    Ok(out)
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).context("malformed instance file")?;
    let items = file
        .items
        .iter()
        .enumerate()
        .map(|(t, item)| {
            let decoded = || -> Result<Item> {
                let values = item.values.iter().map(Number::decode).collect::<Result<_>>()?;
                Ok(Item::new(item.supply.decode()?, values))
            };
            decoded().with_context(|| format!("item {t}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance::new(file.num_agents, items)?)
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let mut text = String::new();
    BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?)
        .read_to_string(&mut text)?;
    instance_from_json(&text).with_context(|| format!("reading {}", path.display()))
}

pub fn write_instance(path: &Path, inst: &Instance, format: NumberFormat) -> Result<()> {
    std::fs::write(path, instance_to_json(inst, format)?).with_context(|| format!("cannot write {}", path.display()))
}

/// One row per agent, one column per item, with an `agent,item_0,...` header.
pub fn write_allocation<W: Write>(out: W, alloc: &Allocation) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["agent".to_string()];
    header.extend((0..alloc.num_items()).map(|t| format!("item_{t}")));
    w.write_record(&header)?;
    for i in 0..alloc.num_agents() {
        let mut row = vec![i.to_string()];
        row.extend(alloc.row(i).iter().map(|x| format!("{x:?}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_allocation_file(path: &Path, alloc: &Allocation) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    write_allocation(BufWriter::new(file), alloc)
}
