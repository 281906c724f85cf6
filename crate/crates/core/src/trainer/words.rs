//! Practice word list and seeded selection.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const THREE_LETTER_WORDS: &[&str] = &[
    "act", "add", "age", "ago", "aid", "aim", "air", "all", "and", "ant", "any", "ape", "arm",
    "art", "ask", "ate", "bad", "bag", "bat", "bed", "bee", "big", "bit", "box", "boy", "bud",
    "bug", "bus", "but", "buy", "cab", "can", "cap", "car", "cat", "cow", "cry", "cup", "cut",
    "dad", "day", "den", "dew", "did", "dig", "dog", "dot", "dry", "due", "ear", "eat", "egg",
    "end", "eye", "fan", "far", "fat", "few", "fig", "fit", "fix", "fly", "fog", "for", "fox",
    "fun", "fur", "gap", "gas", "get", "gum", "gun", "guy", "had", "ham", "has", "hat", "hen",
    "her", "hid", "him", "hip", "his", "hit", "hot", "how", "hug", "ice", "ink", "jam", "jar",
    "jaw", "jet", "job", "joy", "key", "kid", "kit", "lab", "lap", "law", "leg", "let", "lid",
    "lip", "log", "lot", "low", "map", "mat", "men", "mix", "mom", "mud", "mug", "nap", "net",
    "new", "nod", "not", "now", "nut", "oak", "odd", "off", "oil", "old", "one", "our", "out",
    "owl", "own", "pad", "pan", "pen", "pet", "pie", "pig", "pin", "pit", "pot", "put", "rag",
    "ram", "ran", "rat", "raw", "red", "rib", "rid", "rim", "rob", "rod", "row", "rub", "rug",
    "run", "sad", "sat", "saw", "say", "sea", "see", "set", "sew", "she", "sit", "six", "sky",
    "sly", "sob", "son", "sun", "tab", "tag", "tan", "tap", "tax", "tea", "ten", "tie", "tin",
    "tip", "toe", "top", "toy", "try", "tub", "two", "use", "van", "vet", "wag", "war", "was",
    "wax", "way", "web", "wet", "who", "why", "win", "wit", "yak", "yam", "yes", "yet", "zip",
    "zoo",
];

pub fn corpus() -> &'static [&'static str] {
    THREE_LETTER_WORDS
}

/// `count` words of `length` letters drawn with replacement. Three-letter
/// words come from the built-in list; other lengths are random letters.
pub fn pick_words(length: usize, count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            if length == 3 {
                THREE_LETTER_WORDS
                    .choose(&mut rng)
                    .expect("corpus is not empty")
                    .to_string()
            } else {
                (0..length)
                    .map(|_| rng.gen_range(b'a'..=b'z') as char)
                    .collect()
            }
        })
        .collect()
}
