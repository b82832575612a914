//! Shared regular expressions.

use std::sync::OnceLock;

use regex::Regex;

macro_rules! lazy_regex {
    ($name:ident, $re:expr) => {
        pub fn $name() -> &'static Regex {
            static RE: OnceLock<Regex> = OnceLock::new();
            RE.get_or_init(|| Regex::new($re).expect("valid regex"))
        }
    };
}

lazy_regex!(email, r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}");
lazy_regex!(email_exact, r"^[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}$");
lazy_regex!(url, r#"https?://[^\s"'<>\x00-\x1f]+"#);
lazy_regex!(
    image_url,
    r#"(?i)https?://[^\s"'<>\x00-\x1f]+\.(?:jpe?g|png|webp|gif)\b"#
);
lazy_regex!(
    guid,
    r"^[0-9A-Fa-f]{8}-[0-9A-Fa-f]{4}-[0-9A-Fa-f]{4}-[0-9A-Fa-f]{4}-[0-9A-Fa-f]{12}$"
);

#[cfg(test)]
mod tests {
    #[test]
    fn shapes() {
        assert!(super::email_exact().is_match("a@b.co"));
        assert!(!super::email_exact().is_match("a@b.c"));
        assert!(super::image_url().is_match("see http://x.example/p/1.JPG now"));
        assert!(!super::image_url().is_match("http://x.example/p/1.json"));
        assert!(super::guid().is_match("0f8fad5b-d9cb-469f-a165-70867728950e"));
    }
}
