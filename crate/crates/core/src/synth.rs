//! Seeded generator of heterogeneous person-record dataset pairs with planted
//! duplicates, exact ground truth and the true field mappings.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rdf::{triples_to_property_table, Triple, TripleSet};
use crate::table::{value_members, Dataset, FieldId, GroundTruth, Mapping, MappingSet, Record, Schema, VALUE_DELIMITER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Tabular,
    Rdf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    pub n_left: usize,
    pub n_right: usize,
    pub n_dups: usize,
    pub left_style: Style,
    pub right_style: Style,
    /// Per-field probability of one perturbation in a duplicate copy.
    pub noise: f64,
    /// Split the right-hand name into first and last name fields.
    pub field_split: bool,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            n_left: 300,
            n_right: 300,
            n_dups: 100,
            left_style: Style::Tabular,
            right_style: Style::Tabular,
            noise: 0.1,
            field_split: false,
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_left == 0 || self.n_right == 0 {
            return Err(Error::Argument("both datasets need at least one record".into()));
        }
        if self.n_dups > self.n_left.min(self.n_right) {
            return Err(Error::Argument(format!(
                "{} duplicates do not fit into {} x {} records",
                self.n_dups, self.n_left, self.n_right
            )));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Argument(format!("noise {} outside [0,1]", self.noise)));
        }
        Ok(())
    }
}

/// One side of a generated pair.
#[derive(Debug, Clone, PartialEq)]
pub enum SideData {
    Table(Dataset),
    Rdf(TripleSet),
}

impl SideData {
    pub fn to_dataset(&self, name: &str) -> Result<Dataset> {
        match self {
            SideData::Table(ds) => Ok(ds.clone()),
            SideData::Rdf(ts) => triples_to_property_table(ts, name),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub left: SideData,
    pub right: SideData,
    pub truth: GroundTruth,
    pub q_truth: MappingSet,
}

impl Generated {
    /// Both sides as datasets named `left` and `right`.
    pub fn datasets(&self) -> Result<(Dataset, Dataset)> {
        Ok((self.left.to_dataset("left")?, self.right.to_dataset("right")?))
    }
}

const FIRST: &[&str] = &[
    "James", "Mary", "Robert", "Patricia", "John", "Jennifer", "Michael", "Linda", "David", "Elizabeth", "William",
    "Barbara", "Richard", "Susan", "Joseph", "Jessica", "Thomas", "Sarah", "Charles", "Karen", "Daniel", "Nancy",
    "Matthew", "Lisa", "Anthony", "Betty", "Mark", "Margaret", "Donald", "Sandra", "Steven", "Ashley", "Paul",
    "Kimberly", "Andrew", "Emily", "Joshua", "Donna", "Kenneth", "Michelle", "Kevin", "Dorothy", "Brian", "Carol",
    "George", "Amanda", "Edward", "Melissa", "Ronald", "Deborah", "Timothy", "Stephanie", "Jason", "Rebecca",
    "Jeffrey", "Sharon", "Ryan", "Laura", "Jacob", "Cynthia", "Gary", "Kathleen", "Nicholas", "Amy", "Eric",
    "Shirley", "Jonathan", "Angela", "Stephen", "Helen", "Larry", "Anna", "Justin", "Brenda", "Scott", "Pamela",
    "Brandon", "Nicole", "Benjamin", "Emma",
];

const LAST: &[&str] = &[
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis", "Rodriguez", "Martinez",
    "Hernandez", "Lopez", "Gonzalez", "Wilson", "Anderson", "Thomas", "Taylor", "Moore", "Jackson", "Martin", "Lee",
    "Perez", "Thompson", "White", "Harris", "Sanchez", "Clark", "Ramirez", "Lewis", "Robinson", "Walker", "Young",
    "Allen", "King", "Wright", "Scott", "Torres", "Nguyen", "Hill", "Flores", "Green", "Adams", "Nelson", "Baker",
    "Hall", "Rivera", "Campbell", "Mitchell", "Carter", "Roberts", "Gomez", "Phillips", "Evans", "Turner", "Diaz",
    "Parker", "Cruz", "Edwards", "Collins", "Reyes", "Stewart", "Morris", "Morales", "Murphy", "Cook", "Rogers",
    "Gutierrez", "Ortiz", "Morgan", "Cooper", "Peterson", "Bailey", "Reed", "Kelly", "Howard", "Ramos", "Kim", "Cox",
    "Ward", "Richardson",
];

const STREETS: &[&str] = &[
    "Oak", "Maple", "Cedar", "Pine", "Elm", "Washington", "Lake", "Hill", "Park", "Main", "Church", "Highland",
    "Mill", "Sunset", "Ridge", "Spring", "River", "Meadow", "Forest", "Jefferson", "Madison", "Lincoln", "Franklin",
    "Chestnut", "Walnut", "Willow", "Center", "Dogwood", "Hickory", "Magnolia", "Laurel", "Orchard", "Valley",
    "Prospect", "Union", "Garden", "Bridge", "Mountain", "Railroad", "Broad", "Harbor", "Canyon", "Summit", "Grove",
    "Heather", "Aspen", "Birch", "Poplar", "Sycamore", "Juniper",
];

const STREET_TYPES: &[(&str, &str)] = &[
    ("Avenue", "Ave"),
    ("Street", "St"),
    ("Road", "Rd"),
    ("Lane", "Ln"),
    ("Drive", "Dr"),
    ("Boulevard", "Blvd"),
    ("Court", "Ct"),
    ("Place", "Pl"),
];

const CITIES: &[&str] = &[
    "Springfield", "Riverside", "Franklin", "Greenville", "Bristol", "Clinton", "Fairview", "Salem", "Madison",
    "Georgetown", "Arlington", "Ashland", "Burlington", "Manchester", "Oxford", "Jackson", "Milton", "Newport",
    "Auburn", "Dayton", "Lexington", "Milford", "Winchester", "Hudson", "Kingston", "Dover", "Marion", "Centerville",
    "Clayton", "Lebanon", "Oakland", "Portland", "Richmond", "Troy", "Lancaster", "Hamilton", "Chester", "Florence",
    "Columbia", "Bedford",
];

const LEFT_FIELDS: &[&str] = &["name", "address", "city", "zip", "phone"];
const RIGHT_FIELDS: &[&str] = &["full_name", "street", "town", "postcode", "telephone"];
const RIGHT_SPLIT_FIELDS: &[&str] = &["first_name", "last_name", "street", "town", "postcode", "telephone"];

fn person(rng: &mut ChaCha8Rng) -> Vec<String> {
    let name = format!("{} {}", FIRST.choose(rng).unwrap(), LAST.choose(rng).unwrap());
    let (st, _) = STREET_TYPES.choose(rng).unwrap();
    let address = format!("{} {} {}", rng.gen_range(1..1000), STREETS.choose(rng).unwrap(), st);
    let city = CITIES.choose(rng).unwrap().to_string();
    let zip = format!("{:05}", rng.gen_range(10000..100000));
    let phone = |rng: &mut ChaCha8Rng| {
        format!(
            "{} {} {:04}",
            rng.gen_range(200..1000),
            rng.gen_range(200..1000),
            rng.gen_range(0..10000)
        )
    };
    let phones = if rng.gen_bool(0.1) {
        format!("{}{VALUE_DELIMITER}{}", phone(rng), phone(rng))
    } else {
        phone(rng)
    };
    vec![name, address, city, zip, phones]
}

fn substitute(s: &str, rng: &mut ChaCha8Rng) -> String {
    let positions: Vec<usize> = s
        .char_indices()
        .filter(|(_, c)| c.is_ascii_alphanumeric())
        .map(|(i, _)| i)
        .collect();
    let Some(&pos) = positions.choose(rng) else {
        return s.to_string();
    };
    let old = s[pos..].chars().next().unwrap();
    let new = loop {
        let c = if old.is_ascii_digit() {
            char::from(b'0' + rng.gen_range(0..10u8))
        } else {
            char::from(b'a' + rng.gen_range(0..26u8))
        };
        if !c.eq_ignore_ascii_case(&old) {
            break c;
        }
    };
    let mut out = String::with_capacity(s.len());
    out.push_str(&s[..pos]);
    out.push(new);
    out.push_str(&s[pos + old.len_utf8()..]);
    out
}

fn swap_tokens(s: &str, rng: &mut ChaCha8Rng) -> Option<String> {
    let mut tokens: Vec<&str> = s.split(' ').collect();
    if tokens.len() < 2 {
        return None;
    }
    let i = rng.gen_range(0..tokens.len());
    let j = (i + rng.gen_range(1..tokens.len())) % tokens.len();
    tokens.swap(i, j);
    Some(tokens.join(" "))
}

fn abbreviate(field: usize, s: &str) -> Option<String> {
    match field {
        0 => {
            let (first, rest) = s.split_once(' ')?;
            let initial = first.chars().next()?;
            Some(format!("{initial}. {rest}"))
        }
        1 => STREET_TYPES.iter().find_map(|(long, short)| {
            s.strip_suffix(long)
                .filter(|head| head.ends_with(' '))
                .map(|head| format!("{head}{short}"))
        }),
        _ => None,
    }
}

/// One perturbation of one member of the cell.
fn perturb(field: usize, cell: &str, rng: &mut ChaCha8Rng) -> String {
    let mut members: Vec<String> = value_members(cell).map(str::to_string).collect();
    if members.is_empty() {
        return cell.to_string();
    }
    let m = rng.gen_range(0..members.len());
    let v = &members[m];
    members[m] = match rng.gen_range(0..3) {
        0 => substitute(v, rng),
        1 => swap_tokens(v, rng).unwrap_or_else(|| substitute(v, rng)),
        _ => abbreviate(field, v).unwrap_or_else(|| substitute(v, rng)),
    };
    members.join(&VALUE_DELIMITER.to_string())
}

fn split_name(name: &str) -> (String, String) {
    match name.rsplit_once(' ') {
        Some((first, last)) => (first.to_string(), last.to_string()),
        None => (name.to_string(), name.to_string()),
    }
}

fn right_values(values: Vec<String>, split: bool) -> Vec<String> {
    if !split {
        return values;
    }
    let mut it = values.into_iter();
    let (first, last) = split_name(&it.next().unwrap());
    [first, last].into_iter().chain(it).collect()
}

fn emit(style: Style, name: &str, fields: &[&str], rows: Vec<(String, Vec<String>)>) -> Result<SideData> {
    match style {
        Style::Tabular => {
            let schema = Schema::new(name, fields.iter().map(|f| FieldId::from(*f)).collect())?;
            let records = rows.into_iter().map(|(id, v)| Record::new(id, v)).collect();
            Ok(SideData::Table(Dataset::try_new(schema, records)?))
        }
        Style::Rdf => {
            let mut ts = TripleSet::new();
            for (id, values) in rows {
                for (field, cell) in fields.iter().zip(&values) {
                    for member in value_members(cell) {
                        ts.insert(Triple::new(id.as_str(), *field, member))?;
                    }
                }
            }
            Ok(SideData::Rdf(ts))
        }
    }
}

/// Generates a dataset pair from `spec`. Identical specs give identical output.
pub fn generate(spec: &GenSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let left: Vec<Vec<String>> = (0..spec.n_left).map(|_| person(&mut rng)).collect();
    let mut dup_sources: Vec<usize> = (0..spec.n_left).collect();
    dup_sources.shuffle(&mut rng);
    dup_sources.truncate(spec.n_dups);

    let mut right: Vec<(Option<usize>, Vec<String>)> = dup_sources
        .iter()
        .map(|&src| {
            let values = left[src]
                .iter()
                .enumerate()
                .map(|(f, v)| {
                    if spec.noise > 0.0 && rng.gen_bool(spec.noise) {
                        perturb(f, v, &mut rng)
                    } else {
                        v.clone()
                    }
                })
                .collect();
            (Some(src), values)
        })
        .collect();
    right.extend((spec.n_dups..spec.n_right).map(|_| (None, person(&mut rng))));
    right.shuffle(&mut rng);

    let left_id = |i: usize| format!("L{i:05}");
    let right_id = |i: usize| format!("R{i:05}");
    let truth = GroundTruth::new(
        right
            .iter()
            .enumerate()
            .filter_map(|(j, (src, _))| src.map(|s| (left_id(s), right_id(j)))),
    );

    let right_fields = if spec.field_split { RIGHT_SPLIT_FIELDS } else { RIGHT_FIELDS };
    let left_rows = left.into_iter().enumerate().map(|(i, v)| (left_id(i), v)).collect();
    let right_rows = right
        .into_iter()
        .enumerate()
        .map(|(j, (_, v))| (right_id(j), right_values(v, spec.field_split)))
        .collect();

    let mut q_truth = Vec::new();
    if spec.field_split {
        q_truth.push(Mapping::new(["name"], ["first_name", "last_name"], 1.0));
    } else {
        q_truth.push(Mapping::one_to_one("name", "full_name", 1.0));
    }
    for (l, r) in LEFT_FIELDS[1..].iter().zip(&RIGHT_FIELDS[1..]) {
        q_truth.push(Mapping::one_to_one(*l, *r, 1.0));
    }

    Ok(Generated {
        left: emit(spec.left_style, "left", LEFT_FIELDS, left_rows)?,
        right: emit(spec.right_style, "right", right_fields, right_rows)?,
        truth,
        q_truth,
    })
}
