//! Tagged utterance plus an LF template with entity placeholders, through
//! linking, to an executed value.

use lasagne_core::lf::{execute, parse_lf, ExecError, Hole, HoleKind, LfNode, ParseError};
use lasagne_core::linking::{apply_permutation, extract_spans, link_span, InvertedIndex, LinkError, LinkedEntity, TagSequence};
use lasagne_core::{ApproxPolicy, KnowledgeGraph, Symbol, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("template: {0}")]
    Template(#[from] ParseError),
    #[error("template: placeholder `{0}` is not an entity placeholder")]
    NonEntityPlaceholder(Hole),
    #[error("linking: {0}")]
    Linking(LinkError),
    #[error("slot ordering: {0}")]
    Ordering(LinkError),
    #[error("slot ordering: {found} linked entities for {expected} placeholders")]
    ExtraEntities { expected: usize, found: usize },
    #[error("execution: {0}")]
    Execution(#[from] ExecError),
}

/// A knowledge graph with its label index, reusable across utterances.
pub struct Pipeline<'a> {
    kg: &'a KnowledgeGraph,
    index: InvertedIndex,
    pub policy: ApproxPolicy,
}

/// Everything the pipeline produced for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub linked: Vec<LinkedEntity>,
    pub entities: Vec<Symbol>,
    pub lf: LfNode,
    pub value: Value,
}

impl<'a> Pipeline<'a> {
    pub fn new(kg: &'a KnowledgeGraph) -> Self {
        Pipeline {
            kg,
            index: InvertedIndex::build(kg),
            policy: ApproxPolicy::default(),
        }
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    /// Resolves every span of `tagged` and orders the entities by slot.
    pub fn link(&self, tagged: &TagSequence) -> Result<(Vec<LinkedEntity>, Vec<Symbol>), PipelineError> {
        let linked = extract_spans(tagged)
            .iter()
            .map(|s| link_span(s, tagged.tokens(), &self.index, self.kg))
            .collect::<Result<Vec<_>, _>>()
            .map_err(PipelineError::Linking)?;
        let entities = apply_permutation(&linked).map_err(PipelineError::Ordering)?;
        Ok((linked, entities))
    }

    pub fn run(&self, tagged: &TagSequence, template: &LfNode) -> Result<PipelineRun, PipelineError> {
        let (linked, entities) = self.link(tagged)?;
        let lf = fill_entities(template, &entities)?;
        let value = execute(&lf, self.kg, self.policy)?;
        Ok(PipelineRun {
            linked,
            entities,
            lf,
            value,
        })
    }
}

/// Substitutes `entities` into the template's entity placeholders.
///
/// `?eN` takes the `N`-th entity; anonymous `?e` placeholders take the
/// entities in order of appearance.
pub fn fill_entities(template: &LfNode, entities: &[Symbol]) -> Result<LfNode, PipelineError> {
    let holes = template.holes();
    if let Some(h) = holes.iter().find(|h| h.kind != HoleKind::Entity) {
        return Err(PipelineError::NonEntityPlaceholder(*h));
    }
    let numbered = holes.iter().filter_map(|h| h.index).max().unwrap_or(0) as usize;
    let anonymous = holes.iter().filter(|h| h.index.is_none()).count();
    let needed = numbered.max(anonymous);
    if entities.len() < needed {
        return Err(PipelineError::Ordering(LinkError::MissingSlot(entities.len() as u32 + 1)));
    }
    if entities.len() > needed {
        return Err(PipelineError::ExtraEntities {
            expected: needed,
            found: entities.len(),
        });
    }
    let mut next = 0;
    Ok(template.fill_holes(&mut |h| {
        let i = match h.index {
            Some(i) => i as usize - 1,
            None => {
                next += 1;
                next - 1
            }
        };
        Some(LfNode::Entity(entities[i].clone()))
    }))
}

/// One-shot form of [`Pipeline::run`] taking the template as text.
pub fn run_pipeline(kg: &KnowledgeGraph, tagged: &TagSequence, lf_template: &str) -> Result<Value, PipelineError> {
    let template = parse_lf(lf_template)?;
    Ok(Pipeline::new(kg).run(tagged, &template)?.value)
}
