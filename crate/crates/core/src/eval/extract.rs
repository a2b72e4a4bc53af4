//! Answer-letter extraction.

use crate::mcq::OptionKey;

/// First standalone capital `A`–`D` scanning left to right: a letter whose
/// neighbours are not ASCII letters or digits. Covers `B`, `"C"`, `(D)`,
/// `Answer: A` and `The answer is C because …`. Lower-case letters never count.
pub fn extract_choice(raw: &str) -> Option<OptionKey> {
    let chars: Vec<char> = raw.chars().collect();
    let standalone = |i: usize| {
        let before = i.checked_sub(1).map(|j| chars[j]);
        let after = chars.get(i + 1).copied();
        !before.is_some_and(|c| c.is_ascii_alphanumeric()) && !after.is_some_and(|c| c.is_ascii_alphanumeric())
    };
    chars.iter().enumerate().find_map(|(i, c)| match c {
        'A' | 'B' | 'C' | 'D' if standalone(i) => c.to_string().parse().ok(),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(extract_choice("B"), Some(OptionKey::B));
        assert_eq!(extract_choice("The answer is C because the light is red."), Some(OptionKey::C));
        assert_eq!(extract_choice("Answer: \"D\""), Some(OptionKey::D));
        assert_eq!(extract_choice("(A) stop"), Some(OptionKey::A));
        assert_eq!(extract_choice("**B**. Yield"), Some(OptionKey::B));
        assert_eq!(extract_choice("none of these"), None);
        assert_eq!(extract_choice("CD player"), None);
        assert_eq!(extract_choice(""), None);
    }
}
