use std::fmt;

/// Outcome of one law over all its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LawRecord {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl LawRecord {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

impl fmt::Display for LawRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{:e},{:e},{}",
            self.name,
            self.samples,
            self.max_residual,
            self.tolerance,
            if self.passed() { "pass" } else { "fail" }
        )
    }
}

/// One line per law: `name,samples,max_residual,tolerance,verdict`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LawReport {
    pub records: Vec<LawRecord>,
}

impl LawReport {
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(LawRecord::passed)
    }

    pub fn get(&self, name: &str) -> Option<&LawRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LawRecord> {
        self.records.iter().filter(|r| !r.passed())
    }

    pub fn to_csv(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}
