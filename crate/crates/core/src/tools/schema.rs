use serde_json::{json, Map, Value};

use super::ToolLimits;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    String,
    Integer,
    StringArray,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub required: bool,
    pub description: String,
    pub max_items: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolSchema {
    pub name: &'static str,
    pub description: String,
    pub params: Vec<ParamSpec>,
}

impl ToolSchema {
    /// JSON Schema object for the parameters, in the function-calling shape.
    pub fn parameters_json(&self) -> Value {
        let mut props = Map::new();
        for p in &self.params {
            let mut v = match p.kind {
                ParamKind::String => json!({"type": "string"}),
                ParamKind::Integer => json!({"type": "integer", "minimum": 0}),
                ParamKind::StringArray => json!({"type": "array", "items": {"type": "string"}, "minItems": 1}),
            };
            if let Some(max) = p.max_items {
                v["maxItems"] = json!(max);
            }
            v["description"] = json!(p.description);
            props.insert(p.name.to_owned(), v);
        }
        let required: Vec<&str> = self.params.iter().filter(|p| p.required).map(|p| p.name).collect();
        json!({"type": "object", "properties": props, "required": required})
    }

    pub fn to_function_json(&self) -> Value {
        json!({
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": self.parameters_json(),
            }
        })
    }
}

fn param(name: &'static str, kind: ParamKind, required: bool, description: &str) -> ParamSpec {
    ParamSpec {
        name,
        kind,
        required,
        description: description.to_owned(),
        max_items: None,
    }
}

/// Schemas exposed under `limits`. Summarize is omitted when disabled and
/// search takes a single `query` when multi-query is off.
pub fn tool_schemas(limits: &ToolLimits) -> Vec<ToolSchema> {
    let search_params = if limits.multi_query_enabled {
        vec![ParamSpec {
            max_items: Some(limits.multi_query_cap),
            ..param(
                "queries",
                ParamKind::StringArray,
                true,
                &format!(
                    "Up to {} reformulations of the information need; results are merged and deduplicated.",
                    limits.multi_query_cap
                ),
            )
        }]
    } else {
        vec![param("query", ParamKind::String, true, "A single search query.")]
    };
    let mut find_params = vec![
        param("ref_id", ParamKind::String, true, "Reference id of a search result, e.g. turn1search2."),
        param(
            "patterns",
            ParamKind::StringArray,
            true,
            "Keywords or phrases to locate; matching is case-insensitive substring matching.",
        ),
    ];
    if limits.semantic_find_enabled {
        find_params.push(param(
            "mode",
            ParamKind::String,
            false,
            "\"lexical\" (default) or \"semantic\" passage matching.",
        ));
    }
    let mut schemas = vec![
        ToolSchema {
            name: "search",
            description: format!(
                "Discover relevant documents from the entire corpus. Returns up to {} results per query, each with a reference id, title, filename, file type and snippet.",
                limits.per_query_results
            ),
            params: search_params,
        },
        ToolSchema {
            name: "find",
            description: format!(
                "Locate specific information inside a single document. Returns up to {} passages per pattern with line numbers, at most {} tokens in total.",
                limits.find_passages_per_pattern, limits.find_token_cap
            ),
            params: find_params,
        },
        ToolSchema {
            name: "open",
            description: format!(
                "Retrieve windowed full content of a single document: up to {} line-numbered lines starting at line_number (default 0).",
                limits.open_window_lines
            ),
            params: vec![
                param("ref_id", ParamKind::String, true, "Reference id of a search result, e.g. turn1search2."),
                param("line_number", ParamKind::Integer, false, "Zero-based first line of the window."),
            ],
        },
    ];
    if limits.summarize_enabled {
        schemas.push(ToolSchema {
            name: "summarize",
            description: "Record current reasoning and choose which references to keep. Tool output not associated with preserved references is removed from the context.".into(),
            params: vec![
                param("summary", ParamKind::String, true, "Summary of findings so far."),
                param("preserve_refs", ParamKind::StringArray, false, "Reference ids whose content must be kept."),
            ],
        });
    }
    schemas
}
