use std::sync::OnceLock;

use regex::Regex;
use scraper::{ElementRef, Html, Node};

use super::TextprepError;

const DROPPED: &[&str] = &[
    "table", "script", "style", "img", "head", "noscript", "svg", "object", "iframe", "map",
    "picture", "video", "audio", "canvas", "template",
];

const BLOCKS: &[&str] = &[
    "p", "div", "br", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "hr", "body", "section",
    "article", "blockquote", "pre", "center", "dl", "dt", "dd", "title", "header", "footer", "tr",
    "form", "address", "html",
];

fn walk(el: ElementRef, out: &mut String) {
    for child in el.children() {
        match child.value() {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) => {
                let name = e.name();
                if DROPPED.contains(&name) {
                    continue;
                }
                let block = BLOCKS.contains(&name);
                if block {
                    out.push('\n');
                }
                if let Some(c) = ElementRef::wrap(child) {
                    walk(c, out);
                }
                if block {
                    out.push('\n');
                }
            }
            _ => {}
        }
    }
}

/// Plain text of an HTML document with tables, images, scripts and styles
/// removed. Block elements end lines; whitespace inside a line is collapsed
/// and blank lines are dropped.
pub fn html_to_text(body: &str) -> String {
    let doc = Html::parse_document(body);
    let mut raw = String::new();
    walk(doc.root_element(), &mut raw);
    let lines: Vec<String> = raw
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect();
    lines.join("\n")
}

fn item_start() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^item\s*1(?:[.:\s]|$)").expect("valid regex"))
}

fn ending_matter() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^(?:signatures?|exhibit index|index to exhibits|exhibits?(?:\s+and\s+financial statement schedules)?)[.:]?$")
            .expect("valid regex")
    })
}

/// Keeps the item sections: from the first `Item 1` heading up to the
/// signatures or exhibit listing. Text without an `Item 1` heading is kept
/// whole up to any ending matter.
pub fn trim_item_sections(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .position(|l| item_start().is_match(l.trim()))
        .unwrap_or(0);
    let end = lines[start..]
        .iter()
        .position(|l| ending_matter().is_match(l.trim()))
        .map_or(lines.len(), |k| start + k);
    lines[start..end].join("\n")
}

/// [`html_to_text`] followed by [`trim_item_sections`].
pub fn strip_markup(body: &str) -> Result<String, TextprepError> {
    let text = trim_item_sections(&html_to_text(body));
    if text.trim().is_empty() {
        return Err(TextprepError::EmptyDocument);
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_and_tables() {
        assert_eq!(strip_markup("<p>We believe</p>").unwrap(), "We believe");
        assert_eq!(
            strip_markup("<table><tr><td>42</td></tr></table>Revenue rose.").unwrap(),
            "Revenue rose."
        );
        assert_eq!(
            strip_markup("<div>a<br>b <img src=x.png> c</div><script>var x;</script>").unwrap(),
            "a\nb c"
        );
        assert!(matches!(strip_markup("<table><tr><td>1</td></tr></table>"), Err(TextprepError::EmptyDocument)));
    }

    #[test]
    fn front_and_ending_matter() {
        let html = "<html><head><title>10-K</title></head><body>\
            <p>UNITED STATES SECURITIES AND EXCHANGE COMMISSION</p><p>FORM 10-K</p>\
            <p>Item 1. Business</p><p>We make chips.</p>\
            <p>Item 7. Management's Discussion</p><p>Sales grew.</p>\
            <p>SIGNATURES</p><p>Pursuant to the requirements...</p>\
            <p>EXHIBIT INDEX</p><p>10.1 Lease</p></body></html>";
        assert_eq!(
            strip_markup(html).unwrap(),
            "Item 1. Business\nWe make chips.\nItem 7. Management's Discussion\nSales grew."
        );
    }

    #[test]
    fn idempotent_on_output() {
        let once = strip_markup("<p>Item 1.  Business</p><p>Our  outlook &amp; plans.</p>").unwrap();
        assert_eq!(strip_markup(&once).unwrap(), once);
    }
}
