//! Seeded generators for labelled log fixtures: template corpora with known
//! ground truth, Markov event sequences, and small HDFS- and BGL-style files.

use std::fmt::Write as _;

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ground-truth templates; `{kind}` marks a parameter slot.
pub const CORPUS_TEMPLATES: [&str; 20] = [
    "Receiving block {blk} src: {ipport} dest: {ipport}",
    "PacketResponder {int} for block {blk} terminating",
    "Received block {blk} of size {int} from {ip}",
    "BLOCK* NameSystem.addStoredBlock: blockMap updated: {ipport} is added to {blk} size {int}",
    "Verification succeeded for {blk}",
    "Deleting block {blk} file {path}",
    "Served block {blk} to {ip}",
    "session opened for user {user} by (uid={int})",
    "Failed password for {user} from {ip} port {int} ssh2",
    "Connection closed by {ip} [preauth]",
    "generating core.{int}",
    "instruction cache parity error corrected",
    "ciod: failed to read message prefix on control stream (CioStream socket to {ipport}",
    "data TLB error interrupt",
    "Job {int} completed in {float} seconds with status {status}",
    "Starting task {int} on node {node}",
    "User {user} logged out after {int} minutes",
    "Cache miss for key {hex} in region {region}",
    "Worker {int} heartbeat ok",
    "Disk {dev} usage at {int} percent",
];

const USERS: [&str; 6] = ["alice", "bob", "carol", "dave", "erin", "mallory"];
const STATUSES: [&str; 3] = ["OK", "FAILED", "KILLED"];
const REGIONS: [&str; 3] = ["us-east", "eu-west", "ap-south"];
const DEVICES: [&str; 3] = ["sda", "sdb", "nvme0n1"];

fn fill_slot(kind: &str, rng: &mut impl Rng) -> String {
    match kind {
        "blk" => format!("blk_{}{}", if rng.gen_bool(0.5) { "-" } else { "" }, rng.gen_range(1_000_000u64..9_999_999_999)),
        "int" => rng.gen_range(0..100_000u32).to_string(),
        "ip" => format!("10.{}.{}.{}", rng.gen_range(0..256), rng.gen_range(0..256), rng.gen_range(1..255)),
        "ipport" => format!(
            "/10.{}.{}.{}:{}",
            rng.gen_range(0..256),
            rng.gen_range(0..256),
            rng.gen_range(1..255),
            rng.gen_range(1024..65535)
        ),
        "path" => format!("/data/dfs{}/current/subdir{}", rng.gen_range(1..4), rng.gen_range(0..64)),
        "user" => USERS.choose(rng).expect("non-empty").to_string(),
        "float" => format!("{:.3}", rng.gen_range(0.0..500.0)),
        "status" => STATUSES.choose(rng).expect("non-empty").to_string(),
        "node" => format!("R{:02}-M{}-N{}", rng.gen_range(0..64), rng.gen_range(0..2), rng.gen_range(0..16)),
        "hex" => format!("0x{:08x}", rng.gen::<u32>()),
        "region" => REGIONS.choose(rng).expect("non-empty").to_string(),
        "dev" => DEVICES.choose(rng).expect("non-empty").to_string(),
        other => panic!("unknown slot kind {other}"),
    }
}

/// Renders `template`, replacing each `{kind}` slot with a random value.
pub fn render_template(template: &str, rng: &mut impl Rng) -> String {
    let mut out = String::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let end = rest[start..].find('}').expect("closed slot") + start;
        out.push_str(&fill_slot(&rest[start + 1..end], rng));
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone)]
pub struct TemplateCorpus {
    pub lines: Vec<String>,
    /// Index into [`CORPUS_TEMPLATES`] per line.
    pub truth: Vec<usize>,
}

/// `n` lines drawn from [`CORPUS_TEMPLATES`] with skewed template frequencies.
pub fn template_corpus(n: usize, seed: u64) -> TemplateCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<u32> = (0..CORPUS_TEMPLATES.len()).map(|_| rng.gen_range(1..=5)).collect();
    let total: u32 = weights.iter().sum();
    let mut lines = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pick = rng.gen_range(0..total);
        let mut t = 0;
        while pick >= weights[t] {
            pick -= weights[t];
            t += 1;
        }
        lines.push(render_template(CORPUS_TEMPLATES[t], &mut rng));
        truth.push(t);
    }
    TemplateCorpus { lines, truth }
}

/// Transition table of the five-state chain used for sequence fixtures. Each
/// state has two or three successors.
pub const MARKOV_TRANSITIONS: [[f64; 5]; 5] = [
    [0.0, 0.6, 0.4, 0.0, 0.0],
    [0.0, 0.0, 0.5, 0.5, 0.0],
    [0.3, 0.0, 0.0, 0.3, 0.4],
    [0.5, 0.0, 0.0, 0.0, 0.5],
    [0.4, 0.3, 0.0, 0.3, 0.0],
];

/// One walk of `len` states through [`MARKOV_TRANSITIONS`], ids offset by `id_offset`.
pub fn markov_sequence(len: usize, id_offset: u32, rng: &mut impl Rng) -> Vec<u32> {
    let mut state = rng.gen_range(0..5usize);
    let mut seq = Vec::with_capacity(len);
    for _ in 0..len {
        seq.push(state as u32 + id_offset);
        let r: f64 = rng.gen();
        let mut acc = 0.0;
        let row = &MARKOV_TRANSITIONS[state];
        let mut next = row.iter().rposition(|&p| p > 0.0).expect("row has successors");
        for (j, &p) in row.iter().enumerate() {
            acc += p;
            if p > 0.0 && r < acc {
                next = j;
                break;
            }
        }
        state = next;
    }
    seq
}

/// A normal walk with its events shuffled, which breaks the transition structure.
pub fn shuffled_sequence(len: usize, id_offset: u32, rng: &mut impl Rng) -> Vec<u32> {
    let mut seq = markov_sequence(len, id_offset, rng);
    seq.shuffle(rng);
    seq
}

/// Labelled sequences: `normal` Markov walks followed by `anomalous` shuffled walks.
pub fn markov_dataset(normal: usize, anomalous: usize, len: usize, seed: u64) -> (Vec<Vec<u32>>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seqs = Vec::with_capacity(normal + anomalous);
    let mut labels = Vec::with_capacity(normal + anomalous);
    for _ in 0..normal {
        seqs.push(markov_sequence(len, 1, &mut rng));
        labels.push(false);
    }
    for _ in 0..anomalous {
        seqs.push(shuffled_sequence(len, 1, &mut rng));
        labels.push(true);
    }
    (seqs, labels)
}

const HDFS_EVENTS: [&str; 5] = [
    "Receiving block {blk} src: {ipport} dest: {ipport}",
    "Received block {blk} of size {int} from {ip}",
    "PacketResponder {int} for block {blk} terminating",
    "BLOCK* NameSystem.addStoredBlock: blockMap updated: {ipport} is added to {blk} size {int}",
    "Verification succeeded for {blk}",
];
const HDFS_ANOMALY_EVENT: &str = "Exception in receiveBlock for block {blk} java.io.IOException: Connection reset by peer";

/// An HDFS-style raw log plus its `BlockId,Label` sidecar. Normal blocks run
/// the five-event lifecycle; anomalous blocks hit an exception midway.
pub struct HdfsFixture {
    pub log: String,
    pub labels_csv: String,
    pub blocks: Vec<(String, bool)>,
}

pub fn hdfs_fixture(blocks: usize, anomaly_every: usize, seed: u64) -> HdfsFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines: Vec<(u64, String)> = Vec::new();
    let mut labels_csv = String::from("BlockId,Label\n");
    let mut out_blocks = Vec::new();
    for b in 0..blocks {
        let blk = format!("blk_{}", 1_000_000 + b as u64 * 7919);
        let anomalous = anomaly_every > 0 && b % anomaly_every == anomaly_every - 1;
        let events: Vec<&str> = if anomalous {
            vec![HDFS_EVENTS[0], HDFS_ANOMALY_EVENT, HDFS_EVENTS[2]]
        } else {
            HDFS_EVENTS.to_vec()
        };
        let start = b as u64 * 3 + rng.gen_range(0..3);
        for (k, e) in events.iter().enumerate() {
            let body = pin_block_id(&render_template(e, &mut rng), &blk);
            lines.push((start + k as u64 * 2, body));
        }
        let _ = writeln!(labels_csv, "{blk},{}", if anomalous { "Anomaly" } else { "Normal" });
        out_blocks.push((blk, anomalous));
    }
    lines.sort_by_key(|(t, _)| *t);
    let mut log = String::new();
    for (t, body) in lines {
        let ts = Utc.timestamp_opt(1_226_000_000 + t as i64, 0).single().expect("valid");
        let _ = writeln!(log, "{} INFO {}", ts.format("%y%m%d %H%M%S"), body);
    }
    HdfsFixture {
        log,
        labels_csv,
        blocks: out_blocks,
    }
}

/// Forces every generated block id in `body` to `blk`.
fn pin_block_id(body: &str, blk: &str) -> String {
    body.split(' ')
        .map(|tok| if tok.starts_with("blk_") { blk } else { tok })
        .collect::<Vec<_>>()
        .join(" ")
}

const BGL_NORMAL: [&str; 4] = [
    "RAS KERNEL INFO instruction cache parity error corrected",
    "RAS KERNEL INFO generating core.{int}",
    "RAS KERNEL INFO {int} double-hummer alignment exceptions",
    "RAS APP INFO Job {int} completed in {float} seconds with status {status}",
];
const BGL_ALERT: &str = "RAS KERNEL FATAL data TLB error interrupt";

/// A BGL-style raw log: `<label> <epoch> <body>`, `-` marking normal lines.
/// Lines are spread over `hours` hours; every alert lands in the hours listed
/// in `alert_hours`.
pub fn bgl_fixture(lines_per_hour: usize, hours: u32, alert_hours: &[u32], seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = 1_117_843_200i64; // 2005-06-04T00:00:00Z, a 6-hour boundary
    let mut out = String::new();
    for h in 0..hours {
        for k in 0..lines_per_hour {
            let t = base + h as i64 * 3600 + (k as i64 * 3600) / lines_per_hour as i64;
            let alert = alert_hours.contains(&h) && k == lines_per_hour / 2;
            if alert {
                let _ = writeln!(out, "KERNDTLB {t} {BGL_ALERT}");
            } else {
                let tpl = BGL_NORMAL.choose(&mut rng).expect("non-empty");
                let _ = writeln!(out, "- {t} {}", render_template(tpl, &mut rng));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_seeded() {
        let a = template_corpus(50, 3);
        let b = template_corpus(50, 3);
        assert_eq!(a.lines, b.lines);
        assert!(a.lines.iter().all(|l| !l.contains('{')));
    }

    #[test]
    fn markov_walk_respects_transitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = markov_sequence(200, 0, &mut rng);
        for w in seq.windows(2) {
            assert!(MARKOV_TRANSITIONS[w[0] as usize][w[1] as usize] > 0.0);
        }
    }

    #[test]
    fn hdfs_fixture_labels() {
        let f = hdfs_fixture(10, 5, 1);
        assert_eq!(f.blocks.iter().filter(|b| b.1).count(), 2);
        assert_eq!(f.log.lines().count(), 8 * 5 + 2 * 3);
        for (blk, _) in &f.blocks {
            assert!(f.log.contains(blk.as_str()));
        }
    }
}
