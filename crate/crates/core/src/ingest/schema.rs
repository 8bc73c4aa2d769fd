use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TACREV: [&str; 42] = [
    "no_relation",
    "org:alternate_names",
    "org:city_of_headquarters",
    "org:country_of_headquarters",
    "org:dissolved",
    "org:founded",
    "org:founded_by",
    "org:member_of",
    "org:members",
    "org:number_of_employees/members",
    "org:parents",
    "org:political/religious_affiliation",
    "org:shareholders",
    "org:stateorprovince_of_headquarters",
    "org:subsidiaries",
    "org:top_members/employees",
    "org:website",
    "per:age",
    "per:alternate_names",
    "per:cause_of_death",
    "per:charges",
    "per:children",
    "per:cities_of_residence",
    "per:city_of_birth",
    "per:city_of_death",
    "per:countries_of_residence",
    "per:country_of_birth",
    "per:country_of_death",
    "per:date_of_birth",
    "per:date_of_death",
    "per:employee_of",
    "per:origin",
    "per:other_family",
    "per:parents",
    "per:religion",
    "per:schools_attended",
    "per:siblings",
    "per:spouse",
    "per:stateorprovince_of_birth",
    "per:stateorprovince_of_death",
    "per:stateorprovinces_of_residence",
    "per:title",
];

const RETACRED: [&str; 40] = [
    "no_relation",
    "org:alternate_names",
    "org:city_of_branch",
    "org:country_of_branch",
    "org:dissolved",
    "org:founded",
    "org:founded_by",
    "org:member_of",
    "org:members",
    "org:number_of_employees/members",
    "org:political/religious_affiliation",
    "org:shareholders",
    "org:stateorprovince_of_branch",
    "org:top_members/employees",
    "org:website",
    "per:age",
    "per:cause_of_death",
    "per:charges",
    "per:children",
    "per:cities_of_residence",
    "per:city_of_birth",
    "per:city_of_death",
    "per:countries_of_residence",
    "per:country_of_birth",
    "per:country_of_death",
    "per:date_of_birth",
    "per:date_of_death",
    "per:employee_of",
    "per:identity",
    "per:origin",
    "per:other_family",
    "per:parents",
    "per:religion",
    "per:schools_attended",
    "per:siblings",
    "per:spouse",
    "per:stateorprovince_of_birth",
    "per:stateorprovince_of_death",
    "per:stateorprovinces_of_residence",
    "per:title",
];

const SEMEVAL_BASE: [&str; 9] = [
    "Cause-Effect",
    "Component-Whole",
    "Content-Container",
    "Entity-Destination",
    "Entity-Origin",
    "Instrument-Agency",
    "Member-Collection",
    "Message-Topic",
    "Product-Producer",
];

/// A dataset's relation inventory and its abstain label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    pub relation_inventory: Vec<String>,
    pub negative_label: String,
}

impl DatasetSchema {
    /// Expected inventory size of the built-in schemas.
    pub fn expected_size(name: &str) -> Option<usize> {
        match name {
            "retacred" => Some(40),
            "tacrev" => Some(42),
            "semeval" => Some(19),
            _ => None,
        }
    }

    /// `retacred`, `tacrev` or `semeval`.
    pub fn builtin(name: &str) -> Result<Self> {
        let (inventory, negative): (Vec<String>, &str) = match name {
            "retacred" => (RETACRED.iter().map(|s| s.to_string()).collect(), "no_relation"),
            "tacrev" => (TACREV.iter().map(|s| s.to_string()).collect(), "no_relation"),
            "semeval" => {
                let mut v = vec!["Other".to_string()];
                for base in SEMEVAL_BASE {
                    v.push(format!("{base}(e1,e2)"));
                    v.push(format!("{base}(e2,e1)"));
                }
                (v, "Other")
            }
            other => return Err(Error::SchemaMismatch(format!("unknown built-in schema `{other}`"))),
        };
        let schema = Self {
            name: name.to_string(),
            relation_inventory: inventory,
            negative_label: negative.to_string(),
        };
        schema.validate()?;
        Ok(schema)
    }

    /// A built-in name, or a path to a JSON schema file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if Self::expected_size(name_or_path).is_some() {
            return Self::builtin(name_or_path);
        }
        let path = Path::new(name_or_path);
        if !path.exists() {
            return Err(Error::SchemaMismatch(format!(
                "`{name_or_path}` is neither a built-in schema nor a file"
            )));
        }
        let schema: DatasetSchema = serde_json::from_slice(&std::fs::read(path)?)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let unique: BTreeSet<&String> = self.relation_inventory.iter().collect();
        if unique.len() != self.relation_inventory.len() {
            return Err(Error::SchemaMismatch(format!("schema `{}` lists a class twice", self.name)));
        }
        if let Some(expected) = Self::expected_size(&self.name) {
            if self.relation_inventory.len() != expected {
                return Err(Error::SchemaMismatch(format!(
                    "schema `{}` must list {expected} relations, found {}",
                    self.name,
                    self.relation_inventory.len()
                )));
            }
        }
        if !unique.contains(&self.negative_label) {
            return Err(Error::SchemaMismatch(format!(
                "negative label `{}` is not in schema `{}`",
                self.negative_label, self.name
            )));
        }
        Ok(())
    }

    pub fn contains(&self, class: &str) -> bool {
        self.relation_inventory.iter().any(|c| c == class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_sizes() {
        assert_eq!(DatasetSchema::builtin("retacred").unwrap().relation_inventory.len(), 40);
        assert_eq!(DatasetSchema::builtin("tacrev").unwrap().relation_inventory.len(), 42);
        let semeval = DatasetSchema::builtin("semeval").unwrap();
        assert_eq!(semeval.relation_inventory.len(), 19);
        assert_eq!(semeval.negative_label, "Other");
        assert!(DatasetSchema::builtin("nope").is_err());
    }

    #[test]
    fn named_schema_with_wrong_size_is_rejected() {
        let mut s = DatasetSchema::builtin("retacred").unwrap();
        s.relation_inventory.pop();
        assert!(s.validate().is_err());
        s.name = "custom".into();
        assert!(s.validate().is_ok());
    }

    #[test]
    fn negative_label_must_be_listed() {
        let s = DatasetSchema {
            name: "tiny".into(),
            relation_inventory: vec!["a".into()],
            negative_label: "none".into(),
        };
        assert!(s.validate().is_err());
    }
}
