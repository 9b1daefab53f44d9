// Prompt text is kept byte-exact, including trailing whitespace on lines.

#include "prompts/templates.hpp"

#include <string>

namespace cycleprompt::prompts {

// Code-to-description request; `[code]` is replaced by the candidate.
const std::string_view kDescribeCode = R"PROMPT(Given the code below:

[code]

 please conclude and describe the task of the code.)PROMPT";

// System prompt for the description-to-code generator.
const std::string_view kWriteCode = R"PROMPT(You are a professional programmer. You will be given a coding task.

Please use python to write the code.

Your response should include only python code. no code comment, no description, no commentary, no docstring, just the python code.

Attention: NO code comment.)PROMPT";

// Compares original and concluded descriptions. Slots: `[Task description]`, `[code]`, `[Conclusion]`.
const std::string_view kDiscriminateCode = R"PROMPT(We have two procedures, roughly corresponding to:
1. "go from task description to code", and
2. "go from code to task description".

We can achieve a cycle consistency, e.g. description -> generated code -> description, if the original task description and concluded task descriptions are equivalent. This cycle consistency can be achieved only if the generated code is correct. If the code is wrong, the concluded task description from the code will be different from original task description.
The original task description is: [Task description]
 
The generated code is: [code]
 
The concluded task description is: [Conclusion].
Our ultimate goal is to generate the correct code. Please try to find the potential errors/mistakes in the generated code, by observing and reflecting on the differences between the original task description and the concluded task description. Then advise on:
1. how to avoid potential mistakes/errors in the code;
2. how to simplify the code.
The entire response should focus on the specific advice to improve the code quality.
 
A few additional points:
 
(1) If you find inconsistency in the cycle, respond using the template below, where some example notes are provided in parentheses:

-----------------------

The original task is xxx (e.g., write a function counting from 0 to 10),
 
while the concluded task is xxx (e.g., write a function counting from 0 to infinity).
 
The difference is xxx (e.g., the range was changed).
 
The cause of the inconsistency is the generated code xxx (e.g., fail to set max value of range in for loop).
 
Therefore, my advice is:
 
xxx (e.g., ensure that the endpoints of the range are set correctly).

------------------------
 
 
(2) If you find that the cycle consistency has been achieved, respond using the template below:

-----------------------

The cycle is consistent, and I have no more advice.)PROMPT";

// Composite-image comparison; `{description}` is the current caption.
const std::string_view kCaptionDiscriminator = R"PROMPT(        We are machine learning scientists, who are experimenting with cycle consistency in image generation.  

        The cycle we are testing is as follows. Given a reference image:  
        1. Generate a description of the reference image.  
        2. Use the description to generate a candidate image.  
        3. Compare the candidate image to the reference image.  
        4. Write an updated description of the reference image. The key to this step is that whatever differences are detected, they represent things that should be in the reference description, so that the new image is generated correctly (i.e. as close as possible to the reference).  
        5. Go back to step 2, and repeat the cycle.  

        We are currently doing steps 3 and 4, and we need your help.  

        The REFERENCE image is on the LEFT SIDE, and the CANDIDATE image is on the RIGHT.  
        The current description of the reference image is: {description}  

        Think about how the reference image is different from the candidate image, and write a new description of the reference image that takes into account those differences.  
          
        For example, suppose you have:  
          reference image: photo of black cat on brown leather sofa  
          candidate image: illustration of black cat on cloth sofa  
          description: "black cat on sofa"  
        Then the updated description would be something like:  
          "photograph of black cat on brown leather sofa"  
        because the reference image is a photograph, not an illustration, and the sofa is brown leather, not cloth.  
          
        Here are some tips on how to compare two images:  
            - Feature Correspondence: Do distinct features (edges, corners, textures, etc.) in one image correspond to the same features in the other image? If differences exist, describe the REFERENCE in terms of those features.  
            - Geometric Consistency: Do the spatial relationships between features within the images remain consistent. For example, if one image has large trees to the right of a tent, does the other image also have large trees to the right of the tent, or are the spatial relationships swapped or different? Or if the subject is facing one direction in one image, is it facing the same direction in the other image? If differences exist, describe the REFERENCE in terms of those relationships.  
            - Photometric Consistency: Do the images have consistent appearance in terms of lighting, color, and intensity. If differences exist, describe the REFERENCE in terms of those differences in appearance.  
            - Style Consistency: Are the image styles (photograph, painting, drawing, diagram, medical image) the same? If differences exist, describe the REFERENCE in terms of those differences in style.  
            - Semantic Consistency: Do objects and their parts maintain their identity and meaning across the images. For instance, a wheel of a bicycle should still be identifiable as a wheel of a bicyle in the other image. If differences exist, describe the REFERENCE in terms of those differences in semantics.  
            - Structural Integrity: Is the overall structure of the objects in the images preserved across the images? There should be no unnatural distortions or warping that compromise the object's recognizability. If differences exist, describe the REFERENCE in terms of those differences in structure.  
          
        NOTES:  
            - IMPORTANT: The above tips are useful for natural images. For graphical, statistical, or diagrammatic images, focus on the data itself and what kind of reasoning is being conveyed.  
            - Make sure to retain the major components or reasoning of the REFERENCE image.  
            - In the new description NEVER mention the reference or candidate images, i.e. DO NOT include a header or preamble like 'The reference image...' or 'The image on the left...'.  
            - ONLY output the new description. No other text, other than the new description.  
            - If the candidate image misses something, or contradicts the reference image in any of the ways described in the tips above (or otherwise), then EMPHASIZE this thing in the new reference description.  
            - Keep overall response to about 130 words or less. Feel free to shorter phrases or incomplete sentences, if it helps to include important details.  

        The new description of the reference image is:  )PROMPT";

// Detailed single-shot caption used for the baseline arm.
const std::string_view kZeroShotCaption = R"PROMPT(Describe this image in detail. Don't refer to 'This image' or 'This picture'. Just describe what you see in short, simple terms, but be as specific as possible. Consider the following categories while describing:  
- Feature Correspondence: Distinct features (edges, corners, textures, etc.)  
- Geometric Consistency: Spatial relationships between features  
- Photometric Consistency: Appearance in terms of lighting, color, and intensity  
- Style Consistency: Image styles (photograph, painting, drawing, diagram, medical image)  
- Semantic Consistency: Objects and their parts maintaining their identity and meaning  
- Structural Integrity: Overall structure of the objects in the images

Note:
- IMPORTANT: The above tips are useful for natural images. For graphical, statistical, or diagrammatic images, focus on the data itself and what kind of reasoning is being conveyed.
- Keep overall response to about 130 words or less. Feel free to shorter phrases or incomplete sentences, if it helps to include important details.)PROMPT";

// The initial caption is intentionally plain; the detailed prompt is reserved
// for the zero-shot baseline.
const std::string_view kInitialCaption = "Describe this image.";

const std::string_view kVisualQa =
    "Answer the question about the image with a single word or a short phrase.\n"
    "Question: {question}";

const std::string_view kTextQa =
    "You cannot see any image. Answer the question using only the caption below.\n"
    "Do not claim to have seen the image. If the caption does not contain the answer, reply \"unknown\".\n"
    "Caption: {caption}\n"
    "Question: {question}\n"
    "Answer with a single word or a short phrase.";

const std::string_view kDecomposeCaption =
    "Decompose the following caption into short, disjoint assertions about the visual content.\n"
    "Each assertion must be checkable on its own and must not repeat another assertion.\n"
    "Output one assertion per line with no numbering and no other text.\n"
    "Caption: {caption}";

const std::string_view kNegateAssertions =
    "For each assertion below, write one assertion that directly contradicts it.\n"
    "Keep the same order. Output one assertion per line with no numbering and no other text.\n"
    "{assertions}";

const std::string_view kAlignmentQuestion = "Does this image show: {assertion}? Answer yes or no.";

std::string fill(std::string_view tmpl, std::initializer_list<Slot> slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    // Earliest slot occurrence wins; substituted values are never rescanned.
    std::size_t best = std::string_view::npos;
    const Slot* chosen = nullptr;
    for (const auto& slot : slots) {
      if (slot.name.empty()) continue;
      const auto hit = tmpl.find(slot.name, pos);
      if (hit < best) {
        best = hit;
        chosen = &slot;
      }
    }
    if (chosen == nullptr) break;
    out.append(tmpl.substr(pos, best - pos));
    out.append(chosen->value);
    pos = best + chosen->name.size();
  }
  if (pos < tmpl.size()) out.append(tmpl.substr(pos));
  return out;
}

}  // namespace cycleprompt::prompts
