//! File-backed recipe and key store.
//!
//! Layout: `{root}/recipes/{id}` and `{root}/keys/{id}`, one JSON document
//! per file. Any number of readers may use a store concurrently. Writers
//! publish through a temporary file: a non-overwriting put links it into
//! place, so of two racing writers exactly one wins and the other gets
//! `ERR_DUPLICATE_ID`; overwriting puts rename, so the last writer wins.
//!
//! Keys are stored with their private exponent and factors; treat the whole
//! store directory as secret.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::keystage::KeyMaterial;

use super::recipe::Recipe;

/// Source of key material for the pipeline.
pub trait KeyRing {
    fn get_key(&self, key_id: &str) -> Result<KeyMaterial>;
}

impl KeyRing for KeyMaterial {
    fn get_key(&self, key_id: &str) -> Result<KeyMaterial> {
        if self.key_id == key_id {
            Ok(self.clone())
        } else {
            Err(Error::NotFound(format!("key {key_id:?}")))
        }
    }
}

impl KeyRing for [KeyMaterial] {
    fn get_key(&self, key_id: &str) -> Result<KeyMaterial> {
        self.iter()
            .find(|k| k.key_id == key_id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("key {key_id:?}")))
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Recipe,
    Key,
}

impl Kind {
    fn dir(self) -> &'static str {
        match self {
            Kind::Recipe => "recipes",
            Kind::Key => "keys",
        }
    }

    fn noun(self) -> &'static str {
        match self {
            Kind::Recipe => "recipe",
            Kind::Key => "key",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'));
    if ok {
        Ok(())
    } else {
        Err(Error::BadSpec(format!(
            "invalid id {id:?}: use [A-Za-z0-9._-], not leading '.'"
        )))
    }
}

impl Store {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store> {
        let root = root.into();
        for kind in [Kind::Recipe, Kind::Key] {
            fs::create_dir_all(root.join(kind.dir()))?;
        }
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, kind: Kind, id: &str) -> Result<PathBuf> {
        check_id(id)?;
        Ok(self.root.join(kind.dir()).join(id))
    }

    fn put(&self, kind: Kind, id: &str, body: &str, overwrite: bool) -> Result<()> {
        let dest = self.path(kind, id)?;
        let tmp = self.root.join(kind.dir()).join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
        drop(f);
        let published = if overwrite {
            fs::rename(&tmp, &dest)
        } else {
            let r = fs::hard_link(&tmp, &dest);
            let _ = fs::remove_file(&tmp);
            r
        };
        match published {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                Err(Error::DuplicateId(format!("{} {id:?}", kind.noun())))
            }
            Err(e) => {
                let _ = fs::remove_file(&tmp);
                Err(e.into())
            }
        }
    }

    fn get(&self, kind: Kind, id: &str) -> Result<String> {
        match fs::read_to_string(self.path(kind, id)?) {
            Ok(s) => Ok(s),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Err(Error::NotFound(format!("{} {id:?}", kind.noun())))
            }
            Err(e) => Err(e.into()),
        }
    }

    fn list(&self, kind: Kind) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(self.root.join(kind.dir()))? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if check_id(&name).is_ok() {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }

    fn delete(&self, kind: Kind, id: &str) -> Result<()> {
        match fs::remove_file(self.path(kind, id)?) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Err(Error::NotFound(format!("{} {id:?}", kind.noun())))
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn put_recipe(&self, recipe: &Recipe, overwrite: bool) -> Result<()> {
        super::validate_recipe(recipe)?;
        self.put(
            Kind::Recipe,
            &recipe.recipe_id,
            &recipe.to_json(),
            overwrite,
        )
    }

    pub fn get_recipe(&self, id: &str) -> Result<Recipe> {
        let recipe = Recipe::from_json(&self.get(Kind::Recipe, id)?)?;
        if recipe.recipe_id != id {
            return Err(Error::BadSpec(format!(
                "recipe file {id:?} declares id {:?}",
                recipe.recipe_id
            )));
        }
        Ok(recipe)
    }

    pub fn list_recipes(&self) -> Result<Vec<String>> {
        self.list(Kind::Recipe)
    }

    pub fn delete_recipe(&self, id: &str) -> Result<()> {
        self.delete(Kind::Recipe, id)
    }

    pub fn put_key(&self, key: &KeyMaterial, overwrite: bool) -> Result<()> {
        key.validate()?;
        let body = serde_json::to_string_pretty(key).expect("serializable");
        self.put(Kind::Key, &key.key_id, &body, overwrite)
    }

    pub fn list_keys(&self) -> Result<Vec<String>> {
        self.list(Kind::Key)
    }

    pub fn delete_key(&self, id: &str) -> Result<()> {
        self.delete(Kind::Key, id)
    }
}

impl KeyRing for Store {
    fn get_key(&self, key_id: &str) -> Result<KeyMaterial> {
        let key: KeyMaterial = serde_json::from_str(&self.get(Kind::Key, key_id)?)?;
        key.validate()?;
        if key.key_id != key_id {
            return Err(Error::BadKey(format!(
                "key file {key_id:?} declares id {:?}",
                key.key_id
            )));
        }
        Ok(key)
    }
}
