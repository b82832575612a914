//! Token classification and Facebook Graph lookups.
//!
//! Nothing here touches the network unless the caller passes an explicit
//! opt-in; the default transport refuses every request.

use std::collections::BTreeMap;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AuthProvider, AuthToken};

pub const GRAPH_ME_PREFIX: &str = "https://graph.facebook.com/me?access_token=";

/// Everything except RFC 3986 unreserved characters is escaped.
const TOKEN_ESCAPE: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("token is empty")]
    Empty,
    #[error("graph lookup not applicable to {0:?} tokens")]
    NotApplicable(AuthProvider),
}

pub fn build_graph_request(token: &AuthToken) -> Result<String, TokenError> {
    if token.provider != AuthProvider::Facebook {
        return Err(TokenError::NotApplicable(token.provider));
    }
    graph_url(&token.token)
}

/// The Graph `me` URL for a raw token string.
pub fn graph_url(token: &str) -> Result<String, TokenError> {
    if token.is_empty() {
        return Err(TokenError::Empty);
    }
    Ok(format!("{GRAPH_ME_PREFIX}{}", encode_component(token)))
}

/// Percent-encodes everything outside the RFC 3986 unreserved set.
pub fn encode_component(s: &str) -> String {
    utf8_percent_encode(s, TOKEN_ESCAPE).to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifiedIdentity {
    pub name: String,
    pub account_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAssessment {
    pub token: AuthToken,
    pub graph_url: Option<String>,
    pub risk_notes: Vec<String>,
    pub verified_identity: Option<VerifiedIdentity>,
}

fn base_assessment(token: &AuthToken) -> TokenAssessment {
    let mut risk_notes = Vec::new();
    let graph_url = match token.provider {
        AuthProvider::Facebook => {
            risk_notes.push(
                "Facebook token ties account identities together and exposes profile data granted to the app"
                    .to_string(),
            );
            build_graph_request(token).ok()
        }
        AuthProvider::Other => {
            risk_notes.push("unclassified credential".to_string());
            None
        }
        native => {
            risk_notes.push(format!(
                "{} grants access to the app account while unexpired",
                native.label()
            ));
            None
        }
    };
    TokenAssessment {
        token: token.clone(),
        graph_url,
        risk_notes,
        verified_identity: None,
    }
}

pub fn classify_token(token: &AuthToken) -> TokenAssessment {
    base_assessment(token)
}

/// Classifies a set of tokens, adding a reuse note where one token value
/// was recovered from more than one app.
pub fn classify_tokens(tokens: &[AuthToken]) -> Vec<TokenAssessment> {
    let mut apps_by_value: BTreeMap<&str, Vec<crate::model::AppId>> = BTreeMap::new();
    for t in tokens {
        let apps = apps_by_value.entry(t.token.as_str()).or_default();
        if !apps.contains(&t.app) {
            apps.push(t.app);
        }
    }
    tokens
        .iter()
        .map(|t| {
            let mut a = base_assessment(t);
            let apps = &apps_by_value[t.token.as_str()];
            if apps.len() > 1 {
                let names: Vec<&str> = apps.iter().map(|a| a.name()).collect();
                a.risk_notes
                    .push(format!("cross-app reuse: same value recovered from {}", names.join(", ")));
            }
            a
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("online check failed: {0}")]
pub struct OnlineCheckFailed(pub String);

/// `request(url) -> (status, body)`.
pub trait Transport {
    fn request(&self, url: &str) -> Result<(u16, Vec<u8>), OnlineCheckFailed>;
}

/// Refuses every request. The default.
#[derive(Debug, Default, Clone, Copy)]
pub struct RefusingTransport;

impl Transport for RefusingTransport {
    fn request(&self, _url: &str) -> Result<(u16, Vec<u8>), OnlineCheckFailed> {
        Err(OnlineCheckFailed("online check disabled".to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub identity: Option<VerifiedIdentity>,
    pub note: String,
}

/// Looks the token up through `transport`, but only when `allow_online`
/// is set. Failures become notes; they never abort the caller.
pub fn verify_token(
    token: &AuthToken,
    transport: &dyn Transport,
    allow_online: bool,
) -> VerifyOutcome {
    let absent = |note: String| VerifyOutcome {
        identity: None,
        note,
    };
    if !allow_online {
        return absent("online check disabled".to_string());
    }
    let url = match build_graph_request(token) {
        Ok(u) => u,
        Err(e) => return absent(e.to_string()),
    };
    let (status, body) = match transport.request(&url) {
        Ok(r) => r,
        Err(e) => return absent(e.0),
    };
    if status != 200 {
        return absent(format!("graph responded with status {status}"));
    }
    let parsed: serde_json::Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return absent(format!("unparseable graph response: {e}")),
    };
    let field = |k: &str| match parsed.get(k) {
        Some(serde_json::Value::String(s)) => Some(s.clone()),
        Some(serde_json::Value::Number(n)) => Some(n.to_string()),
        _ => None,
    };
    match (field("name"), field("id")) {
        (Some(name), Some(account_id)) => VerifyOutcome {
            identity: Some(VerifiedIdentity { name, account_id }),
            note: "verified".to_string(),
        },
        _ => absent("graph response lacks name/id".to_string()),
    }
}

/// Fills `verified_identity` on an assessment from a verify outcome.
pub fn apply_verification(assessment: &mut TokenAssessment, outcome: &VerifyOutcome) {
    assessment.verified_identity = outcome.identity.clone();
    assessment.risk_notes.push(outcome.note.clone());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AppId, ArtifactSource, FileKind};
    use proptest::prelude::*;
    use std::cell::Cell;

    fn token(provider: AuthProvider, app: AppId, value: &str) -> AuthToken {
        AuthToken {
            provider,
            app,
            token: value.to_string(),
            source: ArtifactSource::file("data/data/x/shared_prefs/a.xml", FileKind::PrefsXml),
            expiry_hint: None,
        }
    }

    /// Independent encoder: unreserved bytes pass through, everything else
    /// becomes %XX with uppercase hex.
    fn oracle_encode(s: &str) -> String {
        let mut out = String::new();
        for b in s.bytes() {
            if b.is_ascii_alphanumeric() || b"-._~".contains(&b) {
                out.push(b as char);
            } else {
                out.push_str(&format!("%{b:02X}"));
            }
        }
        out
    }

    #[test]
    fn graph_url_examples() {
        let fb = |v: &str| token(AuthProvider::Facebook, AppId::Skout, v);
        assert_eq!(
            build_graph_request(&fb("CAAX1")).unwrap(),
            "https://graph.facebook.com/me?access_token=CAAX1"
        );
        assert_eq!(build_graph_request(&fb("")), Err(TokenError::Empty));
        assert_eq!(
            build_graph_request(&fb("a b")).unwrap(),
            format!("{GRAPH_ME_PREFIX}{}", oracle_encode("a b"))
        );
        assert!(build_graph_request(&fb("a b")).unwrap().ends_with("a%20b"));
        assert_eq!(
            build_graph_request(&token(AuthProvider::Grindr, AppId::Grindr, "x")),
            Err(TokenError::NotApplicable(AuthProvider::Grindr))
        );
    }

    #[test]
    fn classification() {
        let fb = classify_token(&token(AuthProvider::Facebook, AppId::Skout, "CAA"));
        assert!(fb.graph_url.is_some());
        assert!(fb.risk_notes[0].contains("ties account identities"));
        let g = classify_token(&token(AuthProvider::Grindr, AppId::Grindr, "g"));
        assert!(g.graph_url.is_none());
        assert!(g.verified_identity.is_none());
    }

    #[test]
    fn cross_app_reuse_is_noted_on_both() {
        let tokens = [
            token(AuthProvider::Facebook, AppId::Tinder, "same"),
            token(AuthProvider::Facebook, AppId::Badoo, "same"),
            token(AuthProvider::Facebook, AppId::Badoo, "other"),
        ];
        let out = classify_tokens(&tokens);
        let reuse = |a: &TokenAssessment| a.risk_notes.iter().any(|n| n.contains("cross-app reuse"));
        assert!(reuse(&out[0]));
        assert!(reuse(&out[1]));
        assert!(!reuse(&out[2]));
    }

    struct Stub {
        status: u16,
        body: &'static str,
        calls: Cell<usize>,
    }

    impl Transport for Stub {
        fn request(&self, url: &str) -> Result<(u16, Vec<u8>), OnlineCheckFailed> {
            assert!(url.starts_with(GRAPH_ME_PREFIX));
            self.calls.set(self.calls.get() + 1);
            Ok((self.status, self.body.as_bytes().to_vec()))
        }
    }

    #[test]
    fn verify_with_stub() {
        let t = token(AuthProvider::Facebook, AppId::Tinder, "CAA");
        let ok = Stub { status: 200, body: r#"{"id":"1","name":"N"}"#, calls: Cell::new(0) };
        let out = verify_token(&t, &ok, true);
        assert_eq!(
            out.identity,
            Some(VerifiedIdentity { name: "N".into(), account_id: "1".into() })
        );
        let bad = Stub { status: 400, body: r#"{"error":{}}"#, calls: Cell::new(0) };
        let out = verify_token(&t, &bad, true);
        assert!(out.identity.is_none());
        assert!(out.note.contains("400"));
    }

    #[test]
    fn default_off_never_calls_transport() {
        let t = token(AuthProvider::Facebook, AppId::Tinder, "CAA");
        let stub = Stub { status: 200, body: r#"{"id":"1","name":"N"}"#, calls: Cell::new(0) };
        let out = verify_token(&t, &stub, false);
        assert_eq!(stub.calls.get(), 0);
        assert_eq!(out.note, "online check disabled");
        let out = verify_token(&t, &RefusingTransport, true);
        assert!(out.identity.is_none());
        assert_eq!(out.note, "online check disabled");
    }

    proptest! {
        #[test]
        fn prefix_and_encoding(s in "\\PC{1,40}") {
            let url = graph_url(&s).unwrap();
            prop_assert!(url.starts_with(GRAPH_ME_PREFIX));
            prop_assert_eq!(&url[GRAPH_ME_PREFIX.len()..], oracle_encode(&s));
        }

        #[test]
        fn injective(a in "\\PC{1,20}", b in "\\PC{1,20}") {
            prop_assume!(a != b);
            prop_assert_ne!(graph_url(&a).unwrap(), graph_url(&b).unwrap());
        }
    }
}
