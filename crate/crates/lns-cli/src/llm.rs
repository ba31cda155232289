//! Chat-completion client for the optional model-in-the-loop passes:
//! rewriting templated sentences into more fluent wording, and recovering
//! a structured summary from transcripts that lack one.
//!
//! Every call is best-effort: transport failures degrade to `None` and the
//! caller falls back to deterministic behavior, so neither pass can make a
//! run fail or block.

use std::env;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value as Json};
use thiserror::Error;

/// How many requests may be in flight at once.
const MAX_IN_FLIGHT: usize = 4;
/// Attempts per request before giving up on it.
const ATTEMPTS: u32 = 3;

/// Connection settings, read from the environment: `LNS_LLM_BASE_URL`
/// (enables the client), `LNS_LLM_API_KEY` (optional bearer token), and
/// `LNS_LLM_MODEL` (optional model name).
#[derive(Clone, Debug)]
pub struct LlmConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("LNS_LLM_BASE_URL is not set")]
    NotConfigured,
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

/// One sentence to refine: its formal form plus the template rendering.
#[derive(Clone, Debug)]
pub struct RefineRequest {
    pub formal: String,
    pub templated: String,
}

impl LlmConfig {
    pub fn from_env() -> Result<Self, LlmError> {
        let base_url = env::var("LNS_LLM_BASE_URL").map_err(|_| LlmError::NotConfigured)?;
        Ok(LlmConfig {
            base_url,
            api_key: env::var("LNS_LLM_API_KEY").ok(),
            model: env::var("LNS_LLM_MODEL").unwrap_or_else(|_| "qwen3-8b".to_string()),
        })
    }

    fn chat(&self, prompt: &str, temperature: f64, top_p: f64) -> Result<String, LlmError> {
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "top_p": top_p,
        });
        let mut request = ureq::post(&url);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let parsed: Json = response
            .body_mut()
            .read_json()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.trim().to_string())
            .ok_or_else(|| LlmError::Malformed(parsed.to_string()))
    }

    fn chat_best_effort(&self, prompt: &str, temperature: f64, top_p: f64) -> Option<String> {
        for attempt in 0..ATTEMPTS {
            match self.chat(prompt, temperature, top_p) {
                Ok(text) => return Some(text),
                Err(_) if attempt + 1 < ATTEMPTS => {
                    thread::sleep(Duration::from_millis(100 << attempt));
                }
                Err(_) => break,
            }
        }
        None
    }

    /// Refines a batch of sentences, at most [`MAX_IN_FLIGHT`] at a time.
    /// Result slots line up with the input; a `None` means every attempt
    /// for that sentence failed.
    pub fn refine_batch(&self, items: &[RefineRequest]) -> Vec<Option<String>> {
        let mut out: Vec<Option<String>> = vec![None; items.len()];
        for (chunk_index, chunk) in items.chunks(MAX_IN_FLIGHT).enumerate() {
            let results = thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|item| {
                        scope.spawn(|| {
                            self.chat_best_effort(&refine_prompt(item), 0.7, 0.8)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("refine worker never panics"))
                    .collect::<Vec<_>>()
            });
            let base = chunk_index * MAX_IN_FLIGHT;
            for (offset, result) in results.into_iter().enumerate() {
                out[base + offset] = result;
            }
        }
        out
    }

    /// Asks the model to restate `raw` in the structured summary format,
    /// deterministically (temperature 0). `None` on any failure.
    pub fn extract(&self, raw: &str, attributes: &[String], relations: &[String]) -> Option<String> {
        self.chat_best_effort(&extract_prompt(raw, attributes, relations), 0.0, 1.0)
    }
}

const REFINE_INSTRUCTIONS: &str = "Given a formal representation in logical form, optimize the corresponding template representation into a fluent, grammatically correct natural language expression that clearly conveys the meaning of the formal representation. Keep the following guidelines in mind:
1. When transforming the template into natural language, ensure that the key terms and relationships (such as specific attributes of entities and the nature of the relationships between them) are preserved exactly. Do not alter critical terms like attribute names, relationships, or the order in which relationships appear.
2. For rule-based formal representations, make sure the causal inference is clearly expressed in the template, highlighting the cause-effect relationship where appropriate.
3. You don't need to strictly follow the template of the examples. Prioritize fluent and diverse language expression, and simply provide the optimized sentence as your answer.";

const REFINE_EXAMPLES: &str = r#"formal representation: is(Susana, low, -8)
template representation: The low of Susana is recorded as -8.
output: Susana's low attribute is recorded as -8.
formal representation: is(Lynn, under, 10)
template representation: The under property for Lynn is represented by the value 10.
output: The under property for Lynn is represented by the value 10.
formal representation: sacrifice(Cecilla, Terrianne)
template representation: Cecilla sacrifice Terrianne.
output: Cecilla sacrifices Terrianne.
formal representation: flood(Jorie, Woodrow)
template representation: It can be said that Jorie flood Woodrow.
output: It can be said that Jorie flooded Woodrow.
formal representation: defuse(entity_1, entity_2) => is(entity_2, technical, subtraction(3 * entity_2[retained] + 8, 5 * entity_2[proven] + 2))
template representation: The difference between multiplying the characteristic retained of entity_2 by 3 with a subtraction of 8 and increasing entity_2's proven 5 times, followed by adding 2 is associated with entity_2 for the technical attribute is a natural consequence of there exists a relationship defuse between entity_1 and entity_2 being true.
output: The relationship between entity_1 and entity_2, denoted as "defuse," implies that entity_2's technical attribute is the result of subtracting the value of five times entity_2's proven characteristic plus 2 from three times entity_2's retained characteristic plus 8.
formal representation: is(entity_1, asian, -1) and is(entity_1, entire, -10) and revise(entity_2, entity_3) => block(entity_3, entity_1)
template representation: Given the asian of entity_1 is -1 and the value -10 is logged for entity_1 under the entire attribute and the revise link is observed between entity_2 and entity_3, entity_3 and entity_1 form a connection of the block relationship follows.
output: Considering that the value -1 is recorded for entity_1 under the asian attribute, and -10 is logged for entity_1 under the entire attribute, along with the existence of a revise relationship between entity_2 and entity_3, it follows that a block relationship is formed between entity_3 and entity_1.
formal representation: is(entity_1, rental, -9) => is(entity_1, monthly, min(5 * entity_1[interstate], 1 * entity_1[deep]))
template representation: The minimum value of scaling the property denoted by interstate for entity_1 by 5 and 1 times the value corresponding to deep within entity_1 is ascribed to entity_1 for the monthly attribute can be safely inferred from within entity_1, the rental attribute is noted as -9.
output: Given that the rental attribute for entity_1 is recorded as -9, it can be inferred that the monthly attribute for entity_1 is assigned the minimum value between 5 times the value of interstate and the value of deep within entity_1 times 1.
formal representation: shop(entity_1, entity_2) and is(entity_3, operating, -6) => is(entity_2, foreign, 0 * entity_2[weakened])
template representation: Given the relationship shop defines a connection between entity_1 and entity_2 and entity_3 is described by -6 within the operating context, the value decreasing the property denoted by weakened for entity_2 by 0 times is ascribed to entity_2 for the foreign attribute follows.
output: Given that the shop relationship exists between entity_1 and entity_2, and entity_3 is described as -6 within the operating context, it follows that the foreign attribute for entity_2 is assigned the value of 0 times the weakened property of entity_2."#;

/// Full refinement prompt for one sentence. The template rendering is
/// shown sentence-cased with a closing period, matching the examples.
pub fn refine_prompt(item: &RefineRequest) -> String {
    format!(
        "{REFINE_INSTRUCTIONS}\nExamples:\n{REFINE_EXAMPLES}\nformal representation: {}\ntemplate representation: {}\noutput: ",
        item.formal,
        sentence_case(&item.templated),
    )
}

/// Uppercases the first letter and guarantees a closing period.
pub fn sentence_case(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 1);
    let mut chars = text.chars();
    if let Some(first) = chars.next() {
        out.extend(first.to_uppercase());
        out.push_str(chars.as_str());
    }
    if !out.is_empty() && !out.ends_with('.') {
        out.push('.');
    }
    out
}

const EXTRACT_INSTRUCTIONS: &str = r#"You are a logical reasoning assistant. Your task is to analyze the given reasoning process and reformat it into a specific structured format.

Requirements:
1. After completing your analysis, summarize the key reasoning steps in the specified structured format
2. The structured format is only required at the end as a summary - your main explanation can be in natural language
3. For the final answer, always use: "Answer: \boxed{[value]}"

Structured Summary Requirements:
"Reasoning:
rule_15 & fact_13 & fact_4 => int_1: relation_name exists between first_entity and second_entity.
rule_5 & fact_1 & fact_10 & fact_11 & fact_5 => int_2: entity_name's attribute_name is attribute_value.
...
Answer: \boxed{answer_value}"

Format Guidelines:
- Each reasoning step should be expressed as: [rule/fact combinations] => int_[n]: [intermediate conclusion]
- Express relationships as "[relation] exists between [X] and [Y]"
- Express attributes as "[X]'s [attribute] is [value]"
- Use logical operators: & (and)
- Number intermediate conclusions sequentially (int_1, int_2, etc.)

Please analyze the following reasoning process and reformat it into the structured format specified above."#;

/// Full extraction prompt for one transcript.
pub fn extract_prompt(raw: &str, attributes: &[String], relations: &[String]) -> String {
    format!(
        "{EXTRACT_INSTRUCTIONS}\n\nOriginal Answer:\n{raw}\n\nAvailable Attributes: {}\n\nAvailable Relations: {}\n",
        attributes.join(", "),
        relations.join(", "),
    )
}
