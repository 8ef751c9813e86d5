#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::path::Path;

use histwhois::ingest::{apply_filter, parse_as2org, parse_pfx2as_line, FilterPolicy, FilterVerdict, Pfx2AsLine};
use histwhois::reserved::default_reserved_prefixes;
use histwhois::{As2OrgTimelines, Day, Engine, LookupQuery, LookupStatus, TrieBuilder};
use ipnet::IpNet;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn d(s: &str) -> Day {
    Day::parse_compact(s).unwrap()
}

pub const CLOUDFLARE_AS2ORG_OLD: &str = "\
# format:org_id|changed|org_name|country|source
CLOUD14-ARIN|20100713|Cloudflare, Inc.|US|ARIN
GOGL-ARIN|20000330|Google LLC|US|ARIN
# format:aut|changed|aut_name|org_id|opaque_id|source
13335|20100713|CLOUDFLARENET|CLOUD14-ARIN||ARIN
15169|20000330|GOOGLE|GOGL-ARIN||ARIN
";

pub const CLOUDFLARE_AS2ORG_NEW: &str = "\
# format:org_id|changed|org_name|country|source
@family-471|20180703|Cloudflare Inc|US|ARIN,RIPE
GOGL-ARIN|20000330|Google LLC|US|ARIN
# format:aut|changed|aut_name|org_id|opaque_id|source
13335|20180703|CLOUDFLARENET-AS|@family-471||RIPE
15169|20000330|GOOGLE|GOGL-ARIN||ARIN
";

pub const BULK_BODY: &str = "begin\n1.1.1.1 20210101\n1.1.1.1 20120101\n8.8.8.8 20210201\nend\n";

/// 1.1.1.0/24 announced by AS13335 every day from 20180320 and
/// 8.8.8.0/24 by AS15169 from 20180101, replayed through 20210301.
pub fn cloudflare_engine() -> Engine {
    let mut b = TrieBuilder::new();
    b.seed_reserved(&default_reserved_prefixes());
    let first = d("20180101");
    let newest = d("20210301");
    let mut day = first;
    while day <= newest {
        b.insert_day(&parse_pfx2as_line("8.8.8.0\t24\t15169", day).unwrap()).unwrap();
        if day >= d("20180320") {
            b.insert_day(&parse_pfx2as_line("1.1.1.0\t24\t13335", day).unwrap()).unwrap();
        }
        day = day.succ();
    }
    let trie = b.finalize(newest);
    let snaps = vec![
        parse_as2org(CLOUDFLARE_AS2ORG_OLD.as_bytes(), d("20180401")).unwrap(),
        parse_as2org(CLOUDFLARE_AS2ORG_NEW.as_bytes(), d("20180703")).unwrap(),
    ];
    Engine::new(trie, As2OrgTimelines::build(&snaps).unwrap())
}

pub fn write_gz(path: &Path, contents: &str) {
    let f = std::fs::File::create(path).unwrap();
    let mut enc = flate2::write::GzEncoder::new(f, flate2::Compression::fast());
    enc.write_all(contents.as_bytes()).unwrap();
    enc.finish().unwrap();
}

/// Writes CAIDA-style file trees under `root/{v4,v6,as2org}`.
pub fn write_dataset(root: &Path, v4_days: &[(&str, String)], v6_days: &[(&str, String)], as2org: &[(&str, &str)]) {
    for sub in ["v4", "v6", "as2org"] {
        std::fs::create_dir_all(root.join(sub)).unwrap();
    }
    for (date, body) in v4_days {
        write_gz(&root.join("v4").join(format!("routeviews-rv2-{date}-1200.pfx2as.gz")), body);
    }
    for (date, body) in v6_days {
        write_gz(&root.join("v6").join(format!("routeviews-rv6-{date}-1200.pfx2as.gz")), body);
    }
    for (date, body) in as2org {
        std::fs::write(root.join("as2org").join(format!("{date}.as-org2info.txt")), body).unwrap();
    }
}

// ---------------------------------------------------------------------------
// Random worlds and a brute-force oracle.

pub const RESERVED_BOUNDARY_ASNS: [u32; 8] = [0, 23456, 64496, 64511, 65535, 131071, 4_200_000_000, 4_294_967_295];

pub struct World {
    pub start: Day,
    pub days: u32,
    /// Raw pfx2as lines per day index, in file order.
    pub lines: Vec<Vec<String>>,
    pub probes: Vec<IpAddr>,
}

fn random_prefix(rng: &mut StdRng) -> IpNet {
    if rng.gen_bool(0.75) {
        let len = rng.gen_range(6..=26u8);
        let base: u32 = match rng.gen_range(0..20) {
            0 => 0x0a00_0000 | rng.gen_range(0..1u32 << 16) << 8,  // 10/8, reserved
            1 => 0xc633_6400 | rng.gen_range(0..256u32),            // 198.51.100/24, reserved
            _ => 0x1400_0000 | rng.gen_range(0..1u32 << 12) << 12, // 20/8, dense
        };
        IpNet::new(Ipv4Addr::from(base).into(), len).unwrap().trunc()
    } else {
        let len = rng.gen_range(16..=50u8);
        let base: u128 = match rng.gen_range(0..20) {
            0 => 0x2001_0db8u128 << 96 | (rng.gen_range(0..1u128 << 16) << 80), // documentation
            _ => 0x2a00u128 << 112 | (rng.gen_range(0..1u128 << 14) << 98),
        };
        IpNet::new(Ipv6Addr::from(base).into(), len).unwrap().trunc()
    }
}

fn random_origin(rng: &mut StdRng) -> String {
    let asn = |rng: &mut StdRng| -> String {
        match rng.gen_range(0..40) {
            0 => RESERVED_BOUNDARY_ASNS.choose(rng).unwrap().to_string(),
            1 => format!("{}.{}", rng.gen_range(0..3), rng.gen_range(1..100)), // asdot
            _ => rng.gen_range(1..12u32).to_string(),
        }
    };
    match rng.gen_range(0..10) {
        0 | 1 => {
            let n = rng.gen_range(2..4);
            (0..n).map(|_| asn(rng)).collect::<Vec<_>>().join("_")
        }
        2 => {
            let n = rng.gen_range(2..4);
            (0..n).map(|_| asn(rng)).collect::<Vec<_>>().join(",")
        }
        _ => asn(rng),
    }
}

pub fn random_world(seed: u64, max_prefixes: usize, max_days: u32) -> World {
    let mut rng = StdRng::seed_from_u64(seed);
    let days = rng.gen_range(1..=max_days);
    let n = rng.gen_range(1..=max_prefixes);
    let mut prefixes: Vec<IpNet> = (0..n).map(|_| random_prefix(&mut rng)).collect();
    prefixes.sort();
    prefixes.dedup();
    let mut lines: Vec<Vec<String>> = vec![Vec::new(); days as usize];
    for p in &prefixes {
        let mut origin = random_origin(&mut rng);
        let pattern = rng.gen_range(0..5);
        let a = rng.gen_range(0..days);
        let b = rng.gen_range(a..days);
        let change_at = rng.gen_range(a..=b);
        for day in a..=b {
            let present = match pattern {
                0 => true,                  // continuous
                1 => rng.gen_bool(0.6),     // gappy
                _ => rng.gen_bool(0.95),
            };
            if pattern == 2 && day == change_at {
                origin = random_origin(&mut rng); // origin change
            }
            if !present {
                continue;
            }
            let fields = format!("{}\t{}\t", p.addr(), p.prefix_len());
            lines[day as usize].push(format!("{fields}{origin}"));
            if pattern == 3 && rng.gen_bool(0.3) {
                // noisy same-day duplicate with another origin
                lines[day as usize].push(format!("{fields}{}", random_origin(&mut rng)));
            }
            if pattern == 4 && rng.gen_bool(0.1) {
                origin = random_origin(&mut rng);
            }
        }
    }
    for day in &mut lines {
        day.shuffle(&mut rng);
    }
    let mut probes = Vec::new();
    for p in prefixes.choose_multiple(&mut rng, 60) {
        probes.push(p.network());
        probes.push(p.broadcast());
        probes.push(random_inside(&mut rng, p));
    }
    for _ in 0..20 {
        let p = random_prefix(&mut rng);
        probes.push(random_inside(&mut rng, &p));
    }
    probes.sort();
    probes.dedup();
    World {
        start: d("20200101"),
        days,
        lines,
        probes,
    }
}

fn random_inside(rng: &mut StdRng, p: &IpNet) -> IpAddr {
    match p {
        IpNet::V4(n) => {
            let host = if n.prefix_len() == 32 { 0 } else { rng.gen::<u32>() >> n.prefix_len() };
            Ipv4Addr::from(u32::from(n.network()) | host).into()
        }
        IpNet::V6(n) => {
            let host = if n.prefix_len() == 128 { 0 } else { rng.gen::<u128>() >> n.prefix_len() };
            Ipv6Addr::from(u128::from(n.network()) | host).into()
        }
    }
}

impl World {
    pub fn day(&self, i: i32) -> Day {
        self.start.add_days(i)
    }

    pub fn newest(&self) -> Day {
        self.day(self.days as i32 - 1)
    }

    /// Replays the world through the production ingest path.
    pub fn engine(&self) -> Engine {
        let policy = FilterPolicy::default();
        let mut b = TrieBuilder::new();
        b.seed_reserved(&policy.reserved_prefixes);
        for (i, day_lines) in self.lines.iter().enumerate() {
            for raw in day_lines {
                let Some(line) = parse_pfx2as_line(raw, self.day(i as i32)) else { continue };
                if apply_filter(&line, &policy) == FilterVerdict::Accept {
                    b.insert_day(&line).unwrap();
                }
            }
        }
        Engine::new(b.finalize(self.newest()), As2OrgTimelines::default())
    }

    pub fn accepted_lines(&self) -> Vec<Pfx2AsLine> {
        let policy = FilterPolicy::default();
        let mut out = Vec::new();
        for (i, day_lines) in self.lines.iter().enumerate() {
            for raw in day_lines {
                if let Some(line) = parse_pfx2as_line(raw, self.day(i as i32)) {
                    if apply_filter(&line, &policy) == FilterVerdict::Accept {
                        out.push(line);
                    }
                }
            }
        }
        out
    }
}

/// Origin value of one prefix on one day: sorted members and AS-set flag.
type DayOrigin = (Vec<u32>, bool);

/// Brute-force reference: per-prefix per-day origin tables built straight
/// from the raw lines, with its own filter, and a linear scan over every
/// prefix for each query.
pub struct Oracle {
    newest: i32,
    table: HashMap<IpNet, BTreeMap<i32, DayOrigin>>,
    reserved: Vec<(IpNet, String)>,
}

const ORACLE_RESERVED_ASNS: &[(u32, u32)] = &[
    (0, 0),
    (23456, 23456),
    (64496, 131071),
    (4_200_000_000, u32::MAX),
];

fn oracle_asn(s: &str) -> Option<u32> {
    match s.split_once('.') {
        Some((h, l)) => {
            let h: u64 = h.parse().ok()?;
            let l: u64 = l.parse().ok()?;
            (h < 65536 && l < 65536).then(|| (h * 65536 + l) as u32)
        }
        None => s.parse().ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    NotFound,
    Reserved(IpNet),
    Found {
        prefix: IpNet,
        first: Day,
        last: Option<Day>,
        asns: Vec<u32>,
        as_set: bool,
    },
}

impl Oracle {
    pub fn new(world: &World) -> Oracle {
        let reserved = default_reserved_prefixes();
        let mut table: HashMap<IpNet, BTreeMap<i32, DayOrigin>> = HashMap::new();
        for (i, day_lines) in world.lines.iter().enumerate() {
            for raw in day_lines {
                let f: Vec<&str> = raw.split('\t').collect();
                let addr: IpAddr = f[0].parse().unwrap();
                let len: u8 = f[1].parse().unwrap();
                let net = IpNet::new(addr, len).unwrap();
                let (lo, hi) = if addr.is_ipv4() { (8, 24) } else { (18, 48) };
                if len < lo || len > hi {
                    continue;
                }
                let members: Vec<u32> = f[2].split(['_', ',']).map(|m| oracle_asn(m).unwrap()).collect();
                if members.iter().any(|a| ORACLE_RESERVED_ASNS.iter().any(|(l, h)| l <= a && a <= h)) {
                    continue;
                }
                if reserved.iter().any(|(r, _)| r.contains(&net)) {
                    continue;
                }
                let distinct: BTreeSet<u32> = members.iter().copied().collect();
                let line_as_set = f[2].contains(',') && distinct.len() > 1;
                let slot = table.entry(net).or_default().entry(i as i32).or_insert((Vec::new(), false));
                let mut set: BTreeSet<u32> = slot.0.iter().copied().collect();
                set.extend(distinct);
                slot.0 = set.into_iter().collect();
                slot.1 = (slot.1 || line_as_set) && slot.0.len() > 1;
            }
        }
        // a reserved exact prefix never carries announcements
        for (r, _) in &reserved {
            table.remove(r);
        }
        Oracle {
            newest: world.days as i32 - 1,
            table,
            reserved,
        }
    }

    /// Every stored or reserved prefix containing `target`, most specific first.
    pub fn candidates(&self, target: &IpNet) -> Vec<Candidate<'_>> {
        let mut out: Vec<Candidate<'_>> = Vec::new();
        for (net, days) in &self.table {
            if net.contains(target) {
                out.push(Candidate { net: *net, days: Some(days) });
            }
        }
        for (net, _) in &self.reserved {
            if net.contains(target) {
                out.push(Candidate { net: *net, days: None });
            }
        }
        out.sort_by_key(|c| std::cmp::Reverse(c.net.prefix_len()));
        out
    }

    pub fn answer(&self, world: &World, candidates: &[Candidate<'_>], day: i32) -> Expected {
        for c in candidates {
            let Some(days) = c.days else { return Expected::Reserved(c.net) };
            if day < 0 {
                continue;
            }
            let probe = day.min(self.newest);
            if day > self.newest && !days.contains_key(&self.newest) {
                continue;
            }
            let Some(value) = days.get(&probe) else { continue };
            let mut first = probe;
            while days.get(&(first - 1)) == Some(value) {
                first -= 1;
            }
            let mut last = probe;
            while days.get(&(last + 1)) == Some(value) {
                last += 1;
            }
            return Expected::Found {
                prefix: c.net,
                first: world.day(first),
                last: (last != self.newest).then(|| world.day(last)),
                asns: value.0.clone(),
                as_set: value.1,
            };
        }
        Expected::NotFound
    }

    pub fn query(&self, world: &World, target: &IpNet, day: i32) -> Expected {
        self.answer(world, &self.candidates(target), day)
    }
}

pub struct Candidate<'a> {
    net: IpNet,
    days: Option<&'a BTreeMap<i32, DayOrigin>>,
}

pub fn observed(engine: &Engine, target: &IpNet, day: Day) -> Expected {
    let r = engine.lookup(&LookupQuery { target: *target, qdate: day });
    match r.status {
        LookupStatus::NotFound => Expected::NotFound,
        LookupStatus::Reserved(_) => Expected::Reserved(r.prefix.unwrap()),
        LookupStatus::Found => Expected::Found {
            prefix: r.prefix.unwrap(),
            first: r.data_first.unwrap(),
            last: r.data_last,
            asns: r.asns,
            as_set: r.origin_kind == Some(histwhois::OriginKind::AsSet),
        },
    }
}

/// Checks every probe on every day (plus a margin either side). Returns the
/// number of comparisons and the first mismatch, if any.
pub fn check_world(world: &World) -> (u64, Option<String>) {
    let engine = world.engine();
    let oracle = Oracle::new(world);
    let mut checked = 0;
    for addr in &world.probes {
        let target = IpNet::from(*addr);
        let candidates = oracle.candidates(&target);
        for day in -2..world.days as i32 + 2 {
            let want = oracle.answer(world, &candidates, day);
            let got = observed(&engine, &target, world.day(day));
            checked += 1;
            if want != got {
                return (checked, Some(format!("{addr} @ {}: want {want:?}, got {got:?}", world.day(day))));
            }
        }
    }
    (checked, None)
}

/// Writes the world as daily pfx2as files (one per family and day, empty
/// days included) plus the Cloudflare AS2ORG pair.
pub fn write_world(root: &Path, world: &World) {
    let mut v4 = Vec::new();
    let mut v6 = Vec::new();
    let dates: Vec<String> = (0..world.days as i32).map(|i| world.day(i).to_string()).collect();
    for (i, day_lines) in world.lines.iter().enumerate() {
        let (mut a, mut b) = (String::new(), String::new());
        for l in day_lines {
            let out = if l.contains(':') { &mut b } else { &mut a };
            out.push_str(l);
            out.push('\n');
        }
        v4.push((dates[i].as_str(), a));
        v6.push((dates[i].as_str(), b));
    }
    write_dataset(root, &v4, &v6, &[("20180401", CLOUDFLARE_AS2ORG_OLD), ("20180703", CLOUDFLARE_AS2ORG_NEW)]);
}

pub fn build_config(root: &Path) -> histwhois::BuildConfig {
    histwhois::BuildConfig {
        pfx2as_v4: Some(root.join("v4")),
        pfx2as_v6: Some(root.join("v6")),
        as2org: root.join("as2org"),
        ..Default::default()
    }
}
