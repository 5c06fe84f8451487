//! Frozen 20-pair scoring fixture.
//!
//! The expected values were computed once with a reference implementation
//! written independently of the Rust scoring code and are frozen here.

pub const METRICS_FIXTURE_BLEU4: f64 = 0.286240984440;
pub const METRICS_FIXTURE_ROUGE_P: f64 = 0.694345238095;
pub const METRICS_FIXTURE_ROUGE_R: f64 = 0.621309523810;
pub const METRICS_FIXTURE_ROUGE_F1: f64 = 0.633537018537;

const PAIRS: [(&str, &str); 20] = [
    ("gets the last known location", "gets the last known location"),
    ("returns the user id", "returns the current user id"),
    (
        "sends a network request to the server",
        "sends an http request to the remote server",
    ),
    ("the the the the", "the cat sat down"),
    ("opens a socket", "opens a network socket and connects"),
    ("reads wifi state", "checks whether wifi is enabled"),
    ("a b c d e", "f g h i j"),
    ("computes the sum of two numbers", "computes the sum of two values"),
    ("x", "x"),
    ("sets the value of the field", "sets the field value"),
    (
        "gets location updates from the provider",
        "requests location updates from the location provider",
    ),
    ("this method does nothing", "does nothing"),
    (
        "parses the manifest file and returns permissions",
        "parses the android manifest and returns the declared permissions",
    ),
    ("closes the connection", "closes the open connection immediately"),
    (
        "returns true if the network is available",
        "returns true when the network is available",
    ),
    (
        "writes bytes to the output stream",
        "writes the buffer to the stream",
    ),
    (
        "gets the device id from the telephony manager",
        "returns the unique device id",
    ),
    ("a a b b c c", "a b c a b c"),
    (
        "initializes the location manager",
        "creates and initializes the location manager instance",
    ),
    ("frees resources", "releases all allocated resources held by this object"),
];

/// The fixture as parallel (hypotheses, references) token lists.
pub fn metrics_fixture_pairs() -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let mut hyps = Vec::new();
    let mut refs = Vec::new();
    for (h, r) in PAIRS {
        hyps.push(h.split_whitespace().map(str::to_string).collect());
        refs.push(r.split_whitespace().map(str::to_string).collect());
    }
    (hyps, refs)
}
