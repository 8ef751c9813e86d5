//! Special-use address blocks that are seeded into the index and reported
//! as reserved instead of being attributed to an AS.

use ipnet::IpNet;

const SPECIAL_USE: &[(&str, &str)] = &[
    ("0.0.0.0/8", "This host on this network"),
    ("10.0.0.0/8", "Private-Use (RFC1918)"),
    ("100.64.0.0/10", "Shared Address Space"),
    ("127.0.0.0/8", "Loopback"),
    ("169.254.0.0/16", "Link Local"),
    ("172.16.0.0/12", "Private-Use (RFC1918)"),
    ("192.0.0.0/24", "IETF Protocol Assignments"),
    ("192.0.2.0/24", "Documentation (TEST-NET-1)"),
    ("192.168.0.0/16", "Private-Use (RFC1918)"),
    ("198.18.0.0/15", "Benchmarking"),
    ("198.51.100.0/24", "Documentation (TEST-NET-2)"),
    ("203.0.113.0/24", "Documentation (TEST-NET-3)"),
    ("240.0.0.0/4", "Reserved"),
    ("255.255.255.255/32", "Limited Broadcast"),
    ("::/128", "Unspecified Address"),
    ("::1/128", "Loopback Address"),
    ("::ffff:0:0/96", "IPv4-mapped Address"),
    ("100::/64", "Discard-Only Address Block"),
    ("2001:2::/48", "Benchmarking"),
    ("2001:db8::/32", "Documentation"),
    ("3fff::/20", "Documentation"),
    ("fc00::/7", "Unique-Local"),
    ("fe80::/10", "Link-Local Unicast"),
];

/// The default special-use registry as `(prefix, label)` pairs.
pub fn default_reserved_prefixes() -> Vec<(IpNet, String)> {
    SPECIAL_USE
        .iter()
        .map(|(p, label)| (p.parse().expect("static prefix"), label.to_string()))
        .collect()
}
