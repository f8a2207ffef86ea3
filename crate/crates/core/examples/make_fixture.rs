//! Regenerates the bundled demo dump under `fixtures/demo/`.
//!
//! ```text
//! cargo run --example make_fixture -- crates/core/fixtures/demo
//! ```
//!
//! Five regions, March to May 2020, scraped on 31 May with 40% of tweets
//! older than a week retained. Kerala's burden tweets stop after 20 April.

use std::fs;
use std::path::PathBuf;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use hospital_burden::ingest::{simulate_truncation, write_corpus, Region, RegionRegistry, TweetCorpus, TweetRecord};

const START: &str = "2020-03-01";
const DAYS: i64 = 92;
const SCRAPE: &str = "2020-05-31";
const KERALA_CUTOFF: &str = "2020-04-20";
const RETENTION: f64 = 0.4;

struct Profile {
    code: &'static str,
    name: &'static str,
    country: &'static str,
    offset: i32,
    lang: &'static str,
    peak_day: f64,
    height: f64,
    width: f64,
    cities: &'static [&'static str],
    hospitals: &'static [&'static str],
    burden: &'static [&'static str],
    filler: &'static [&'static str],
    noise: &'static [&'static str],
    has_cases: bool,
}

const EN_BURDEN: &[&str] = &[
    "No beds available at {h} hospital in {c}, shortage of oxygen #covid",
    "ICU full at {h}, patients waiting outside for hours #COVID19",
    "Medical college hospital in {c} has no ICU beds left, please help",
    "Urgent: need ICU bed for my father in {c}, hospitals refusing admission",
    "Oxygen shortage at {h} hospital, doctors struggling https://t.co/{u}",
    "Beds shortage again, {h} medical college turning patients away",
];
const EN_FILLER: &[&str] = &[
    "Stay home stay safe everyone #corona",
    "Wear masks and wash hands, covid is real",
    "Corona lockdown day {n}, bored at home",
    "New covid guidelines announced today https://t.co/{u}",
];
const EN_NOISE: &[&str] = &[
    "Cricket highlights tonight",
    "Monsoon arriving soon",
    "Great movie on TV",
];

const ID_BURDEN: &[&str] = &[
    "RS di {c} penuh, tidak ada tempat tidur kosong #covid",
    "Rumah sakit {h} overkapasitas, IGD penuh sama pasien corona",
    "Faskes udah kewalahan bgt, UGD {h} penuh #covid19",
    "Cari ICU buat ortu di {c}, semua rumah sakit penuh, tolong bantu corona",
    "Kekurangan tempat tidur di rsud {c}, nakes kelelahan #covid",
];
const ID_FILLER: &[&str] = &[
    "Tetap dirumah aja gaes, corona makin serem",
    "Jangan lupa pakai masker, covid belum selesai",
    "Hari ke {n} psbb, kangen nongkrong #corona",
];
const ID_NOISE: &[&str] = &["Macet parah hari ini di tol", "Nonton drakor seharian"];

const BN_BURDEN: &[&str] = &[
    "{c} হাসপাতালে কোনো শয্যা নেই, আইসিইউ সংকট #covid",
    "অক্সিজেন সংকট, রোগী অপেক্ষা করছে corona",
    "Hospital beds shortage in {c}, ICU full #COVID19",
    "স্বাস্থ্য কেন্দ্রে ডাক্তার নেই covid",
];
const BN_FILLER: &[&str] = &["বাসায় থাকুন নিরাপদ থাকুন #corona", "Stay home Bangladesh, covid is spreading"];
const BN_NOISE: &[&str] = &["বৃষ্টি হচ্ছে আজ", "Cricket match postponed"];

fn profiles() -> Vec<Profile> {
    vec![
        Profile {
            code: "DL",
            name: "Delhi",
            country: "India",
            offset: 330,
            lang: "en",
            peak_day: 76.0,
            height: 24.0,
            width: 14.0,
            cities: &["Delhi", "Noida"],
            hospitals: &["AIIMS", "LNJP"],
            burden: EN_BURDEN,
            filler: EN_FILLER,
            noise: EN_NOISE,
            has_cases: true,
        },
        Profile {
            code: "MH",
            name: "Maharashtra",
            country: "India",
            offset: 330,
            lang: "en",
            peak_day: 80.0,
            height: 32.0,
            width: 16.0,
            cities: &["Mumbai", "Pune"],
            hospitals: &["KEM", "Sion"],
            burden: EN_BURDEN,
            filler: EN_FILLER,
            noise: EN_NOISE,
            has_cases: true,
        },
        Profile {
            code: "KL",
            name: "Kerala",
            country: "India",
            offset: 330,
            lang: "en",
            peak_day: 28.0,
            height: 20.0,
            width: 10.0,
            cities: &["Kochi", "Thiruvananthapuram"],
            hospitals: &["Ernakulam General", "SCTIMST"],
            burden: EN_BURDEN,
            filler: EN_FILLER,
            noise: EN_NOISE,
            has_cases: true,
        },
        Profile {
            code: "JK",
            name: "DKI Jakarta",
            country: "Indonesia",
            offset: 420,
            lang: "id",
            peak_day: 68.0,
            height: 20.0,
            width: 15.0,
            cities: &["Jakarta", "Depok"],
            hospitals: &["Cipto", "Persahabatan"],
            burden: ID_BURDEN,
            filler: ID_FILLER,
            noise: ID_NOISE,
            has_cases: false,
        },
        Profile {
            code: "BD",
            name: "Bangladesh",
            country: "Bangladesh",
            offset: 360,
            lang: "bn",
            peak_day: 74.0,
            height: 16.0,
            width: 14.0,
            cities: &["Dhaka", "Chittagong"],
            hospitals: &["DMCH", "Kurmitola"],
            burden: BN_BURDEN,
            filler: BN_FILLER,
            noise: BN_NOISE,
            has_cases: true,
        },
    ]
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).unwrap().sample(rng) as u64
    }
}

// Most tweets open with a mention, which keeps identical templates distinct.
fn fill(template: &str, rng: &mut ChaCha8Rng, p: &Profile, day: i64) -> String {
    let prefix = if rng.random::<f64>() < 0.8 {
        format!("@user{} ", rng.random_range(1..20_000))
    } else {
        String::new()
    };
    prefix
        + &template
            .replace("{c}", p.cities.choose(rng).unwrap())
            .replace("{h}", p.hospitals.choose(rng).unwrap())
            .replace("{n}", &(day + 1).to_string())
            .replace("{u}", &format!("{:08x}", rng.random::<u32>()))
}

fn main() {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "fixtures/demo".into()).into();
    fs::create_dir_all(&out).unwrap();
    let start: NaiveDate = START.parse().unwrap();
    let scrape: NaiveDate = SCRAPE.parse().unwrap();
    let cutoff: NaiveDate = KERALA_CUTOFF.parse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20200531);

    let mut registry = RegionRegistry::new();
    let mut regions_csv = String::from("code,name,country,utc_offset_minutes\n");
    let mut cases_csv = String::from("region,date,new_cases\n");
    let mut records = Vec::new();
    let mut next_id = 0u64;
    let mut push =
        |records: &mut Vec<TweetRecord>, rng: &mut ChaCha8Rng, p: &Profile, date: NaiveDate, text: String| {
            next_id += 1;
            let local = date.and_hms_opt(0, 0, 0).unwrap() + Duration::seconds(rng.random_range(0..86_400));
            let utc = Utc.from_utc_datetime(&(local - Duration::minutes(p.offset as i64)));
            records.push(TweetRecord {
                id: format!("t{next_id:06}"),
                timestamp: utc,
                region: p.code.into(),
                text,
                lang: p.lang.into(),
            });
        };

    for p in profiles() {
        regions_csv.push_str(&format!("{},{},{},{}\n", p.code, p.name, p.country, p.offset));
        registry
            .insert(
                p.code,
                Region {
                    name: p.name.into(),
                    country: p.country.into(),
                    utc_offset_minutes: p.offset,
                },
            )
            .unwrap();
        for day in 0..DAYS {
            let date = start + Duration::days(day);
            let z = (day as f64 - p.peak_day) / p.width;
            let mut burden = 2.0 + p.height * (-0.5 * z * z).exp();
            if p.code == "KL" && date > cutoff {
                burden = 0.0;
            }
            for _ in 0..poisson(&mut rng, burden) {
                let text = fill(p.burden.choose(&mut rng).unwrap(), &mut rng, &p, day);
                if rng.random::<f64>() < 0.1 {
                    let rt = format!("RT @user{}: {text}", rng.random_range(1..500));
                    push(&mut records, &mut rng, &p, date, rt);
                }
                push(&mut records, &mut rng, &p, date, text);
            }
            for _ in 0..poisson(&mut rng, 12.0) {
                let text = fill(p.filler.choose(&mut rng).unwrap(), &mut rng, &p, day);
                push(&mut records, &mut rng, &p, date, text);
            }
            for _ in 0..poisson(&mut rng, 4.0) {
                let text = p.noise.choose(&mut rng).unwrap().to_string();
                push(&mut records, &mut rng, &p, date, text);
            }
            if p.has_cases {
                let mean = if p.code == "KL" && date > cutoff {
                    1.0
                } else {
                    1.0 + 8.0 * burden
                };
                cases_csv.push_str(&format!("{},{date},{}\n", p.code, poisson(&mut rng, mean)));
            }
        }
    }

    let corpus = TweetCorpus::new(records, scrape).unwrap();
    let truncated = simulate_truncation(&corpus, scrape, RETENTION, 7, &registry).unwrap();
    let dump = out.join("tweets.jsonl");
    write_corpus(&truncated, &dump).unwrap();
    // one damaged line, well inside the loader's tolerance
    let mut text = fs::read_to_string(&dump).unwrap();
    text.push_str("{\"id\": \"broken\", \"created_at\": \n");
    fs::write(&dump, text).unwrap();
    fs::write(out.join("regions.csv"), regions_csv).unwrap();
    fs::write(out.join("cases.csv"), cases_csv).unwrap();
    println!("{} tweets kept of {}", truncated.len(), corpus.len());
}
