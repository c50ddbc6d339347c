//! Regenerates the bundled mini-dataset under `data/mini`.
//!
//! The generation table is constructed so the prompt-count curve has a known
//! shape: for every fact the original prompt, the four lexicon swaps, the four
//! embedding swaps and the stopword-filtered prompt answer a fixed wrong object
//! with probability 0.9, and all twenty back-translations answer the gold
//! object with probability 0.4.
//!
//!     cargo run -p probe-cli --example build_mini [OUT_DIR]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use probe_core::augment::{
    augment_all, AugmentConfig, AugmentResources, AugmentationType, EmbeddingTable, Prompt, StopwordSet, SynonymLexicon,
};
use probe_core::backend::{Language, MockTranslator, TranslationEntry, SOURCE_LANGUAGE};
use probe_core::dataset::{load_facts, render_prompt};
use serde_json::json;

const WRONG_P: f64 = 0.9;
const GOLD_P: f64 = 0.4;

// (id, label, template)
const RELATIONS: [(&str, &str, &str); 25] = [
    ("P17", "Country", "Which country is {subject} located in?"),
    ("P19", "Place of birth", "Where was {subject} born?"),
    ("P20", "Place of death", "Where did {subject} die?"),
    ("P27", "Country of citizenship", "Which country is {subject} a citizen of?"),
    ("P30", "Continent", "On which continent does {subject} lie?"),
    ("P36", "Capital", "What is the capital of {subject}?"),
    ("P37", "Official language", "What is the official language of {subject}?"),
    ("P50", "Author", "Who is the author of {subject}?"),
    ("P69", "Educated at", "Where was {subject} educated?"),
    ("P103", "Native language", "What is the native language of {subject}?"),
    ("P119", "Place of burial", "Where is {subject} buried?"),
    ("P131", "Located in the administrative territorial entity", "In which administrative unit does {subject} lie?"),
    ("P140", "Religion or worldview", "What is the religion of {subject}?"),
    ("P155", "Follows", "What does {subject} follow?"),
    ("P156", "Followed by", "What is {subject} followed by?"),
    ("P159", "Headquarters location", "Where is the headquarters of {subject}?"),
    ("P407", "Language of work or name", "In which language is {subject} written?"),
    ("P495", "Country of origin", "What is the country of origin of {subject}?"),
    ("P641", "Sport", "Which sport does {subject} play?"),
    ("P740", "Location of information", "Where was {subject} founded?"),
    ("P937", "Work location", "Where did {subject} work?"),
    ("P1365", "Replaces", "Whom did {subject} replace?"),
    ("P1366", "Replaced by", "By whom was {subject} replaced?"),
    ("P1376", "Capital of", "What is {subject} the capital of?"),
    ("P1412", "Languages spoken, written, or signed", "Which language does {subject} speak?"),
];

// (relation, subject, gold, wrong)
const FACTS: [(&str, &str, &str, &str); 100] = [
    ("P17", "Eiffel Tower", "France", "Belgium"),
    ("P17", "Mount Fuji", "Japan", "China"),
    ("P17", "Machu Picchu", "Peru", "Bolivia"),
    ("P17", "Table Mountain", "South Africa", "Namibia"),
    ("P19", "Albert Einstein", "Ulm", "Munich"),
    ("P19", "Frida Kahlo", "Coyoacán", "Mexico City"),
    ("P19", "Wolfgang Amadeus Mozart", "Salzburg", "Vienna"),
    ("P19", "Marie Curie", "Warsaw", "Paris"),
    ("P20", "Albert Einstein", "Princeton", "Berlin"),
    ("P20", "Napoleon Bonaparte", "Saint Helena", "Paris"),
    ("P20", "Vincent van Gogh", "Auvers-sur-Oise", "Arles"),
    ("P20", "Ludwig van Beethoven", "Vienna", "Bonn"),
    ("P27", "Nelson Mandela", "South Africa", "Kenya"),
    ("P27", "Rabindranath Tagore", "India", "Bangladesh"),
    ("P27", "Gabriel García Márquez", "Colombia", "Mexico"),
    ("P27", "Haruki Murakami", "Japan", "China"),
    ("P30", "Kenya", "Africa", "Asia"),
    ("P30", "Argentina", "South America", "Europe"),
    ("P30", "Mongolia", "Asia", "Europe"),
    ("P30", "Iceland", "Europe", "North America"),
    ("P36", "Australia", "Canberra", "Sydney"),
    ("P36", "Canada", "Ottawa", "Toronto"),
    ("P36", "Brazil", "Brasília", "Rio de Janeiro"),
    ("P36", "Turkey", "Ankara", "Istanbul"),
    ("P37", "Brazil", "Portuguese", "Spanish"),
    ("P37", "Iran", "Persian", "Arabic"),
    ("P37", "Austria", "German", "Austrian"),
    ("P37", "Suriname", "Dutch", "English"),
    ("P50", "Pride and Prejudice", "Jane Austen", "Charlotte Brontë"),
    ("P50", "One Hundred Years of Solitude", "Gabriel García Márquez", "Jorge Luis Borges"),
    ("P50", "The Tale of Genji", "Murasaki Shikibu", "Sei Shōnagon"),
    ("P50", "Don Quixote", "Miguel de Cervantes", "Lope de Vega"),
    ("P69", "Mahatma Gandhi", "University College London", "University of Oxford"),
    ("P69", "Sigmund Freud", "University of Vienna", "University of Berlin"),
    ("P69", "Marie Curie", "University of Paris", "University of Warsaw"),
    ("P69", "Sun Yat-sen", "Hong Kong College of Medicine for Chinese", "Peking University"),
    ("P103", "Vladimir Nabokov", "Russian", "English"),
    ("P103", "Joseph Conrad", "Polish", "English"),
    ("P103", "Samuel Beckett", "English", "French"),
    ("P103", "Milan Kundera", "Czech", "French"),
    ("P119", "Hans-Georg Gadamer", "Heidelberg", "Erlangen"),
    ("P119", "Karl Marx", "Highgate Cemetery", "Trier"),
    ("P119", "William Shakespeare", "Stratford-upon-Avon", "London"),
    ("P119", "Frédéric Chopin", "Père Lachaise Cemetery", "Warsaw"),
    ("P131", "Stonehenge", "Wiltshire", "Somerset"),
    ("P131", "Golden Gate Bridge", "San Francisco", "Marin County"),
    ("P131", "Neuschwanstein Castle", "Bavaria", "Tyrol"),
    ("P131", "Uluru", "Northern Territory", "South Australia"),
    ("P140", "Thomas Aquinas", "Catholicism", "Protestantism"),
    ("P140", "Rumi", "Islam", "Christianity"),
    ("P140", "Martin Luther", "Lutheranism", "Catholicism"),
    ("P140", "Nichiren", "Buddhism", "Shinto"),
    ("P155", "Tuesday", "Monday", "Wednesday"),
    ("P155", "World War II", "World War I", "Korean War"),
    ("P155", "Windows 8", "Windows 7", "Windows Vista"),
    (
        "P155",
        "Harry Potter and the Chamber of Secrets",
        "Harry Potter and the Philosopher's Stone",
        "Harry Potter and the Prisoner of Azkaban",
    ),
    ("P156", "Monday", "Tuesday", "Sunday"),
    ("P156", "Windows 7", "Windows 8", "Windows 10"),
    ("P156", "Bronze Age", "Iron Age", "Stone Age"),
    ("P156", "Baroque music", "Classical period", "Renaissance music"),
    ("P159", "Toyota", "Toyota City", "Tokyo"),
    ("P159", "Nokia", "Espoo", "Helsinki"),
    ("P159", "Volkswagen", "Wolfsburg", "Munich"),
    ("P159", "Nestlé", "Vevey", "Geneva"),
    ("P407", "The Tale of Genji", "Japanese", "Chinese"),
    ("P407", "Les Misérables", "French", "English"),
    ("P407", "War and Peace", "Russian", "French"),
    ("P407", "Don Quixote", "Spanish", "Portuguese"),
    ("P495", "Sushi", "Japan", "China"),
    ("P495", "Tango", "Argentina", "Spain"),
    ("P495", "Pizza", "Italy", "Greece"),
    ("P495", "Flamenco", "Spain", "Portugal"),
    ("P641", "Lionel Messi", "football", "basketball"),
    ("P641", "Serena Williams", "tennis", "golf"),
    ("P641", "Sachin Tendulkar", "cricket", "baseball"),
    ("P641", "Michael Jordan", "basketball", "volleyball"),
    ("P740", "The Beatles", "Liverpool", "London"),
    ("P740", "ABBA", "Stockholm", "Gothenburg"),
    ("P740", "Nirvana", "Aberdeen", "Seattle"),
    ("P740", "Metallica", "Los Angeles", "San Francisco"),
    ("P937", "Immanuel Kant", "Königsberg", "Berlin"),
    ("P937", "Niels Bohr", "Copenhagen", "Stockholm"),
    ("P937", "Johann Sebastian Bach", "Leipzig", "Dresden"),
    ("P937", "Michelangelo", "Rome", "Florence"),
    ("P1365", "Barack Obama", "George W. Bush", "Bill Clinton"),
    ("P1365", "Angela Merkel", "Gerhard Schröder", "Helmut Kohl"),
    ("P1365", "Pope Francis", "Pope Benedict XVI", "Pope John Paul II"),
    ("P1365", "Elizabeth II", "George VI", "Edward VIII"),
    ("P1366", "George W. Bush", "Barack Obama", "Donald Trump"),
    ("P1366", "Gerhard Schröder", "Angela Merkel", "Olaf Scholz"),
    ("P1366", "Pope Benedict XVI", "Pope Francis", "Pope John Paul II"),
    ("P1366", "George VI", "Elizabeth II", "Edward VIII"),
    ("P1376", "Paris", "France", "Belgium"),
    ("P1376", "Nairobi", "Kenya", "Tanzania"),
    ("P1376", "Canberra", "Australia", "New Zealand"),
    ("P1376", "Ottawa", "Canada", "Ontario"),
    ("P1412", "Jacques Chirac", "French", "German"),
    ("P1412", "Vladimir Putin", "Russian", "Ukrainian"),
    ("P1412", "Pablo Picasso", "Spanish", "Italian"),
    ("P1412", "Akira Kurosawa", "Japanese", "Korean"),
];

// headword, lexicon synonyms, embedding neighbours (closest first)
const WORDS: [(&str, [&str; 4], [&str; 4]); 24] = [
    ("located", ["situated", "placed", "sited", "set"], ["positioned", "found", "based", "settled"]),
    ("born", ["delivered", "birthed", "bred", "spawned"], ["raised", "reared", "nurtured", "begotten"]),
    ("die", ["perish", "expire", "decease", "pass"], ["succumb", "depart", "fall", "end"]),
    ("citizen", ["national", "resident", "native", "denizen"], ["inhabitant", "civilian", "member", "dweller"]),
    ("continent", ["landmass", "mainland", "region", "land"], ["hemisphere", "subcontinent", "territory", "zone"]),
    ("capital", ["seat", "metropolis", "capitol", "hub"], ["city", "centre", "municipality", "township"]),
    ("official", ["formal", "authorized", "sanctioned", "recognized"], ["governmental", "statutory", "legal", "state"]),
    ("author", ["writer", "novelist", "creator", "composer"], ["poet", "playwright", "essayist", "scribe"]),
    ("educated", ["schooled", "taught", "trained", "tutored"], ["instructed", "coached", "enlightened", "lectured"]),
    ("native", ["mother", "first", "original", "indigenous"], ["ancestral", "vernacular", "domestic", "aboriginal"]),
    ("buried", ["inhumed", "interred", "entombed", "laid"], ["hidden", "planted", "deposited", "stashed"]),
    (
        "administrative",
        ["managerial", "executive", "bureaucratic", "civic"],
        ["organizational", "regulatory", "supervisory", "directorial"],
    ),
    ("religion", ["faith", "creed", "belief", "worship"], ["theology", "spirituality", "doctrine", "church"]),
    ("follow", ["succeed", "trail", "pursue", "chase"], ["track", "shadow", "tail", "accompany"]),
    ("followed", ["succeeded", "trailed", "pursued", "chased"], ["tracked", "shadowed", "tailed", "accompanied"]),
    ("headquarters", ["head office", "main office", "base", "command"], ["office", "bureau", "station", "depot"]),
    ("written", ["composed", "penned", "authored", "drafted"], ["scripted", "typed", "inscribed", "recorded"]),
    ("origin", ["source", "provenance", "derivation", "beginning"], ["root", "genesis", "birthplace", "cradle"]),
    ("sport", ["game", "athletics", "pastime", "recreation"], ["match", "contest", "competition", "league"]),
    ("founded", ["established", "created", "formed", "started"], ["launched", "instituted", "organized", "begun"]),
    ("work", ["labor", "toil", "serve", "operate"], ["practice", "function", "job", "trade"]),
    ("replace", ["supersede", "supplant", "substitute", "displace"], ["swap", "exchange", "relieve", "oust"]),
    (
        "replaced",
        ["superseded", "supplanted", "substituted", "displaced"],
        ["swapped", "exchanged", "relieved", "ousted"],
    ),
    ("speak", ["talk", "utter", "converse", "say"], ["verbalize", "voice", "articulate", "pronounce"]),
];

// Back-translation artefacts per pivot; `{q}` is the question with a lowercase first letter.
const FRAMES: [(Language, [&str; 6]); 5] = [
    (
        Language::Fr,
        [
            "Can you tell me {q}",
            "Do you know {q}",
            "Tell me {q}",
            "I would like to know {q}",
            "Say {q}",
            "Could you say {q}",
        ],
    ),
    (
        Language::Ru,
        [
            "Tell me please, {q}",
            "Please tell, {q}",
            "Interesting, {q}",
            "Question: {q}",
            "Answer, {q}",
            "Say please, {q}",
        ],
    ),
    (
        Language::De,
        [
            "Do you know, {q}",
            "Can you say, {q}",
            "One question: {q}",
            "Please tell me, {q}",
            "Know you, {q}",
            "Tell, {q}",
        ],
    ),
    (
        Language::Es,
        [
            "Could you tell me {q}",
            "Do you know {q} then",
            "I ask: {q}",
            "Tell me, please, {q}",
            "Can you say me {q}",
            "Let me know {q}",
        ],
    ),
    (
        Language::Ja,
        [
            "{q} Please tell me.",
            "{q} I want to know.",
            "{q} Do you know?",
            "About this: {q}",
            "{q} Please answer.",
            "{q} Please teach me.",
        ],
    ),
];

const FAN_OUT: usize = 8;

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn embeddings_text() -> String {
    let dim = WORDS.len();
    let mut out = String::new();
    let mut row = |word: &str, v: Vec<f64>| {
        out.push_str(word);
        for x in v {
            out.push_str(&format!(" {x}"));
        }
        out.push('\n');
    };
    for (c, (head, _, neighbours)) in WORDS.iter().enumerate() {
        let mut v = vec![0.0; dim];
        v[c] = 1.0;
        row(head, v);
        for (m, word) in neighbours.iter().enumerate() {
            let mut v = vec![0.0; dim];
            v[c] = 1.0;
            v[(c + 1) % dim] = (m as f64 + 1.0) / 10.0;
            row(word, v);
        }
    }
    out
}

fn translation_entries(original: &str) -> Vec<TranslationEntry> {
    let q = lower_first(original);
    let mut entries = Vec::new();
    for (lang, frames) in FRAMES {
        let pivots: Vec<(String, f64)> =
            (0..FAN_OUT).map(|i| (format!("[{lang} {i}] {original}"), 0.5f64.powi(i as i32 + 1))).collect();
        for (i, (pivot, _)) in pivots.iter().enumerate() {
            let back = (0..FAN_OUT)
                .map(|j| (frames[(i + j) % frames.len()].replace("{q}", &q), 0.5f64.powi(j as i32 + 1)))
                .collect();
            entries.push(TranslationEntry {
                source: lang,
                target: SOURCE_LANGUAGE,
                text: pivot.clone(),
                candidates: back,
            });
        }
        entries.push(TranslationEntry {
            source: SOURCE_LANGUAGE,
            target: lang,
            text: original.to_string(),
            candidates: pivots,
        });
    }
    entries
}

fn write(dir: &Path, name: &str, text: String) {
    fs::write(dir.join(name), text).unwrap_or_else(|e| panic!("{name}: {e}"));
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// A JSON array with one compact element per line.
fn one_per_line<T: serde::Serialize>(items: &[T]) -> String {
    let rows: Vec<String> = items.iter().map(|i| serde_json::to_string(i).expect("json")).collect();
    format!("[\n{}\n]\n", rows.join(",\n"))
}

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini"));
    fs::create_dir_all(&dir).expect("output directory");

    let templates: BTreeMap<&str, &str> = RELATIONS.iter().map(|(id, _, t)| (*id, *t)).collect();
    write(&dir, "templates.json", pretty(&templates));

    let labels: BTreeMap<&str, &str> = RELATIONS.iter().map(|(id, l, _)| (*id, *l)).collect();
    let mut facts = String::new();
    for (rel, subject, gold, _) in FACTS {
        let record =
            json!({"subject": subject, "relation_id": rel, "relation_label": labels[rel], "gold_object": gold});
        facts.push_str(&serde_json::to_string(&record).expect("json"));
        facts.push('\n');
    }
    write(&dir, "facts.jsonl", facts);

    let lexicon: BTreeMap<&str, Vec<&str>> = WORDS.iter().map(|(h, syn, _)| (*h, syn.to_vec())).collect();
    write(&dir, "lexicon.json", pretty(&lexicon));
    write(&dir, "embeddings.txt", embeddings_text());

    let fact_set = load_facts(&dir.join("facts.jsonl"), Some(&dir.join("templates.json"))).expect("facts");
    let originals: Vec<String> = fact_set
        .facts()
        .iter()
        .map(|f| render_prompt(fact_set.template(&f.relation_id).expect("template"), &f.subject).expect("render"))
        .collect();
    let translations: Vec<TranslationEntry> = originals.iter().flat_map(|o| translation_entries(o)).collect();
    write(&dir, "translations.json", one_per_line(&translations));

    let lexicon = SynonymLexicon::from_file(&dir.join("lexicon.json")).expect("lexicon");
    let embeddings = EmbeddingTable::from_file(&dir.join("embeddings.txt")).expect("embeddings");
    let translator = MockTranslator::from_file(&dir.join("translations.json")).expect("translations");
    let stopwords = StopwordSet::bundled_english();
    let resources = AugmentResources {
        lexicon: &lexicon,
        embeddings: &embeddings,
        translator: Some(&translator),
        stopwords: &stopwords,
    };

    let mut generations: BTreeMap<String, Vec<serde_json::Value>> = BTreeMap::new();
    for ((fact, original), (_, _, gold, wrong)) in fact_set.facts().iter().zip(&originals).zip(FACTS) {
        assert_eq!(&fact.gold_object, gold);
        let aug = augment_all(
            &Prompt::original(original.clone(), fact.key()),
            Some(&fact.subject),
            &resources,
            &AugmentConfig::default(),
        );
        assert!(
            aug.warnings.is_empty() && aug.shortfalls.is_empty(),
            "{}: {:?} {:?}",
            fact.key(),
            aug.warnings,
            aug.shortfalls
        );
        assert_eq!(aug.prompts.len(), 30, "{}", fact.key());
        let distinct: BTreeSet<&str> = aug.prompts.iter().map(|p| p.text.as_str()).collect();
        assert_eq!(distinct.len(), 30, "{}: duplicate prompts", fact.key());
        for p in &aug.prompts {
            let (text, probability) = if p.augmentation.pivot().is_some() { (gold, GOLD_P) } else { (wrong, WRONG_P) };
            let previous = generations.insert(p.text.clone(), vec![json!({"text": text, "probability": probability})]);
            assert!(previous.is_none(), "prompt shared across facts: {:?}", p.text);
        }
        let wrong_count = aug.prompts.iter().filter(|p| p.augmentation.pivot().is_none()).count();
        assert_eq!(wrong_count, 10);
        assert_eq!(aug.prompts[0].augmentation, AugmentationType::Original);
    }
    write(&dir, "generations.json", pretty(&generations));

    let config = json!({
        "facts_path": "facts.jsonl",
        "templates_path": "templates.json",
        "generation": {"name": "mock-generator", "endpoint": "mock", "mock_table": "generations.json"},
        "translation": {"name": "mock-translator", "endpoint": "mock", "mock_table": "translations.json"},
        "resources": {"lexicon": "lexicon.json", "embeddings": "embeddings.txt"},
        "strategy": "sum",
        "k_values": [1, 2, 5, 10, 20, 30],
        "iterations": 5,
        "seed": 2023,
        "output_dir": "../../target/mini-report"
    });
    write(&dir, "config.json", pretty(&config));
    eprintln!("wrote {} facts, {} prompts to {}", FACTS.len(), generations.len(), dir.display());
}
