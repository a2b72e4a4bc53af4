//! Test-prompt construction for the visual and text variants.

use std::fmt;
use std::path::{Path, PathBuf};

use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::retrieval::Retriever;
use super::EvalError;
use crate::llm::{ChatRequest, ImageAttachment};
use crate::mcq::Mcq;
use crate::prompts::{TEST_TEXT, TEST_VISUAL};

pub const RAG_TOP_K: usize = 5;
pub const FRAME_COUNT: usize = 4;
pub const COT_INSTRUCTION: &str =
    "Let's think step by step: identify every traffic rule that applies, resolve any conflict between them, then choose.";
pub const RAG_HEADER: &str = "Relevant traffic rule excerpts:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Visual,
    Text,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Visual => "visual",
            Variant::Text => "text",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "visual" => Ok(Variant::Visual),
            "text" => Ok(Variant::Text),
            other => Err(format!("unknown variant {other:?} (expected visual or text)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub variant: Variant,
    pub cot: bool,
    pub rag: bool,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.variant.as_str())?;
        if self.cot {
            f.write_str("+cot")?;
        }
        if self.rag {
            f.write_str("+rag")?;
        }
        Ok(())
    }
}

/// Same question with frames replaced by the textual scene description.
pub fn derive_text_variant(mcq: &Mcq) -> Result<Mcq, EvalError> {
    match &mcq.scene_text {
        Some(t) if !t.trim().is_empty() => Ok(Mcq { frame_refs: None, ..mcq.clone() }),
        _ => Err(EvalError::MissingSceneText(mcq.id.clone())),
    }
}

/// Turns a frame reference into an image payload.
pub trait FrameLoader: Send + Sync {
    fn load(&self, frame: &str) -> Result<ImageAttachment, EvalError>;
}

/// Reads frames from files under a root directory.
#[derive(Debug, Clone)]
pub struct DirFrameLoader {
    pub root: PathBuf,
}

impl DirFrameLoader {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirFrameLoader { root: root.into() }
    }
}

fn media_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        _ => "image/png",
    }
}

impl FrameLoader for DirFrameLoader {
    fn load(&self, frame: &str) -> Result<ImageAttachment, EvalError> {
        let path = self.root.join(frame);
        let bytes = std::fs::read(&path).map_err(|e| EvalError::Frame(format!("{}: {e}", path.display())))?;
        Ok(ImageAttachment {
            media_type: media_type(&path).to_string(),
            data: base64::engine::general_purpose::STANDARD.encode(bytes),
        })
    }
}

pub struct PromptContext<'a> {
    pub retriever: Option<&'a dyn Retriever>,
    pub frames: Option<&'a dyn FrameLoader>,
}

/// Text used to query the rule-book corpus.
pub fn retrieval_query(mcq: &Mcq) -> String {
    let mut q = format!("{} {} {}", mcq.jurisdiction, mcq.scene_text.as_deref().unwrap_or(""), mcq.question_stem);
    for (_, text) in mcq.options.iter() {
        q.push(' ');
        q.push_str(text);
    }
    q
}

/// Builds the request for one question under one condition.
///
/// User message layout, each block separated by a blank line: retrieved
/// excerpts (RAG), the step-by-step instruction (CoT), the jurisdiction line,
/// the scene description (text variant), the question stem, the options.
pub fn build_prompt(mcq: &Mcq, condition: Condition, ctx: &PromptContext<'_>, repeat: u32) -> Result<ChatRequest, EvalError> {
    let mut blocks: Vec<String> = Vec::new();
    if condition.rag {
        let retriever = ctx.retriever.ok_or(EvalError::NoRetriever)?;
        let passages = retriever.retrieve(&retrieval_query(mcq), RAG_TOP_K);
        let mut block = RAG_HEADER.to_string();
        for (i, p) in passages.iter().enumerate() {
            block.push_str(&format!("\n[{}] {} {}: {}", i + 1, p.source, p.article, p.text));
        }
        blocks.push(block);
    }
    if condition.cot {
        blocks.push(COT_INSTRUCTION.to_string());
    }
    blocks.push(format!("Jurisdiction: {}", mcq.jurisdiction));
    let (system, images) = match condition.variant {
        Variant::Text => {
            let text = derive_text_variant(mcq)?;
            blocks.push(format!("Scenario Description: {}", text.scene_text.unwrap_or_default()));
            (TEST_TEXT, Vec::new())
        }
        Variant::Visual => {
            let frames = match &mcq.frame_refs {
                Some(f) if f.len() == FRAME_COUNT => f,
                _ => return Err(EvalError::MissingFrames(mcq.id.clone())),
            };
            let loader = ctx.frames.ok_or_else(|| EvalError::MissingFrames(mcq.id.clone()))?;
            (TEST_VISUAL, frames.iter().map(|f| loader.load(f)).collect::<Result<Vec<_>, _>>()?)
        }
    };
    blocks.push(format!("Question: {}", mcq.question_stem));
    blocks.push(
        mcq.options.iter().map(|(k, t)| format!("{k}. {t}")).collect::<Vec<_>>().join("\n"),
    );
    let mut req = ChatRequest::new(system.trim_end(), blocks.join("\n\n")).with_tag(&mcq.id, repeat);
    req.images = images;
    Ok(req)
}
