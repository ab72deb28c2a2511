use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Viewer,
    Editor,
    Admin,
}

impl Role {
    pub fn parse(s: &str) -> Option<Role> {
        match s.trim() {
            "viewer" => Some(Role::Viewer),
            "editor" => Some(Role::Editor),
            "admin" => Some(Role::Admin),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiToken {
    #[serde(skip)]
    pub token: String,
    pub role: Role,
    pub org: String,
}

/// Static bearer tokens; admins may mint more at runtime.
#[derive(Debug, Default)]
pub struct TokenStore {
    tokens: RwLock<HashMap<String, ApiToken>>,
}

impl TokenStore {
    /// One `token,role,org` per line; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<TokenStore, String> {
        let store = TokenStore::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let [token, role, org] = parts[..] else {
                return Err(format!("line {}: expected token,role,org", n + 1));
            };
            let role = Role::parse(role).ok_or_else(|| format!("line {}: unknown role {role:?}", n + 1))?;
            if token.is_empty() {
                return Err(format!("line {}: empty token", n + 1));
            }
            store.insert(ApiToken { token: token.to_string(), role, org: org.to_string() });
        }
        Ok(store)
    }

    pub fn insert(&self, token: ApiToken) {
        self.tokens.write().unwrap_or_else(|e| e.into_inner()).insert(token.token.clone(), token);
    }

    pub fn resolve(&self, token: &str) -> Option<ApiToken> {
        self.tokens.read().unwrap_or_else(|e| e.into_inner()).get(token).cloned()
    }
}
