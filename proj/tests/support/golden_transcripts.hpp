#pragma once

#include <string>
#include <vector>

// Verbatim model transcripts used as parser goldens across the test suites.

namespace golden {

// Five-point summary with the "My expert summary:" header variant.
inline constexpr const char* kFivePointSummary =
    "My expert summary:\n"
    "\n"
    "1. Excited about returning to the office\n"
    "\n"
    "2. Concerned about career advancement in hybrid work arrangements\n"
    "\n"
    "3. Fears missing out on networking opportunities with clients and colleagues\n"
    "\n"
    "4. Believes remote work can lead to isolation and reduced connections\n"
    "\n"
    "5. Hopes company balances flexibility with face-to-face interaction for collective growth";

inline constexpr const char* kTwoPointSummary =
    "My summary:\n"
    "1. Responded quickly to emails\n"
    "2. Turned in good work";

// Full code-creation decision transcript (video conferencing cluster).
inline constexpr const char* kCodeCreatedTranscript =
    "My expert analysis:\n"
    "\n"
    "Step 1 (codebook examination)\n"
    "\n"
    "- The existing codebook includes codes related to technology and communication such as "
    "\"technological challenges\" and \"flexible scheduling and remote work options\".\n"
    "\n"
    "Step 2 (current data examination)\n"
    "\n"
    "- The main theme in the written response is the need for reliable, user-friendly video "
    "conferencing tools and robust infrastructure for seamless communication.\n"
    "\n"
    "Step 3 (analysis part 1)\n"
    "\n"
    "- The existing code \"technological challenges\" partially captures the issues related to "
    "video conferencing tools but does not fully encompass the specific needs mentioned in the "
    "response.\n"
    "\n"
    "- The code \"flexible scheduling and remote work options\" touches on the need for "
    "communication platforms but is more focused on scheduling flexibility rather than the "
    "technical aspects of communication tools.\n"
    "\n"
    "Step 4 (analysis part 2)\n"
    "\n"
    "- To better capture the specific technological needs expressed in the written response, a "
    "new code could be created to encapsulate these requirements.\n"
    "\n"
    "- This new code would focus on the need for reliable and user-friendly video conferencing "
    "tools, secure VPNs, and high-speed internet.\n"
    "\n"
    "Step 5 (reflection on planned suggestions)\n"
    "\n"
    "- The creation of this new code aligns with the evaluation criteria as it minimizes "
    "redundancy and provides a more precise description of the technological needs mentioned in "
    "the response.\n"
    "\n"
    "- This code is essential for capturing the nuances of the technological challenges faced by "
    "individuals working from home.\n"
    "\n"
    "My logical recommendation:\n"
    "\n"
    "Code: reliable video conferencing tools\n"
    "\n"
    "Definition: Need for user-friendly, reliable video conferencing tools (e.g., Zoom, Google "
    "Meet), secure VPNs, and high-speed internet to facilitate seamless communication and "
    "collaboration.";

inline constexpr const char* kExpectedCreatedDefinition =
    "Need for user-friendly, reliable video conferencing tools (e.g., Zoom, Google Meet), secure "
    "VPNs, and high-speed internet to facilitate seamless communication and collaboration.";

// Full decline transcript (hybrid work cluster).
inline constexpr const char* kNoCodeTranscript =
    "My expert analysis:\n"
    "\n"
    "Step 1 (codebook examination)\n"
    "\n"
    "- The existing codebook includes codes related to work-life balance, hybrid work "
    "flexibility, and family responsibilities.\n"
    "\n"
    "Step 2 (current data examination)\n"
    "\n"
    "- The main theme in the written response is the desire for flexible, hybrid work "
    "arrangements that accommodate various personal needs, including caring for elderly parents "
    "or young kids.\n"
    "\n"
    "Step 3 (analysis part 1)\n"
    "\n"
    "- The existing codes \"hybrid work flexibility\" and \"work-life balance\" partially capture "
    "the main theme but do not fully encompass the specific need for accommodating diverse "
    "family responsibilities.\n"
    "\n"
    "Step 4 (analysis part 2)\n"
    "\n"
    "- No new codes needed: The existing code \"hybrid work flexibility\" can be expanded to "
    "include the nuance of accommodating various personal needs, thus avoiding unnecessary code "
    "creation and maintaining parsimony in the codebook.\n"
    "\n"
    "Step 5 (reflection on planned suggestions)\n"
    "\n"
    "- Reflecting on the evaluation criteria, the recommendation maintains the integrity of the "
    "existing codes while ensuring that the specific need for diverse family responsibilities is "
    "captured without creating redundant or overly specific codes.\n"
    "\n"
    "My logical recommendation:\n"
    "\n"
    "No new codes needed\n";

// Twelve flexible-work codes and the five themes a model consolidated them to.
inline const std::vector<std::string>& twelve_input_codes() {
    static const std::vector<std::string> codes = {
        "Flexible work arrangements for wellbeing",
        "Flexible work hours",
        "In office work frequency and day uncertainty",
        "Uncertainty about remote work frequency and future schedules",
        "Flexible work arrangements for caregivers",
        "Individualized flexible work arrangements",
        "Supportive inclusive work environment",
        "Resistance to traditional office hours",
        "Staggered work hours/shifts",
        "Clear workday end time and personal time protection guidelines",
        "Break and lunch dynamics uncertainty",
        "Control over work hours"};
    return codes;
}

inline const std::vector<std::string>& five_output_themes() {
    static const std::vector<std::string> themes = {
        "Flexibility in Work Arrangements", "Uncertainty in Work Schedules",
        "Supportive Work Environment", "Clear Guidelines and Boundaries",
        "Control Over Work Hours"};
    return themes;
}

}  // namespace golden
