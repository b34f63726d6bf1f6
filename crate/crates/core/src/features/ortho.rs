#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OrthoFlags {
    pub initcap: bool,
    pub allcaps: bool,
    pub alnum_mix: bool,
    pub punct: bool,
}

pub fn orthographic_flags(token: &str) -> OrthoFlags {
    let has_alpha = token.chars().any(char::is_alphabetic);
    OrthoFlags {
        initcap: token.chars().next().is_some_and(char::is_uppercase),
        allcaps: has_alpha && token.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase),
        alnum_mix: has_alpha && token.chars().any(|c| c.is_ascii_digit()),
        punct: !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric() && !c.is_whitespace()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!(orthographic_flags("3M").alnum_mix);
        let ibm = orthographic_flags("IBM");
        assert!(ibm.allcaps && ibm.initcap && !ibm.alnum_mix && !ibm.punct);
        assert_eq!(orthographic_flags("profit"), OrthoFlags::default());
        assert!(orthographic_flags(",").punct);
        assert!(orthographic_flags("''").punct);
        assert!(!orthographic_flags("1,234").punct);
        assert!(orthographic_flags("Company").initcap && !orthographic_flags("Company").allcaps);
    }
}
