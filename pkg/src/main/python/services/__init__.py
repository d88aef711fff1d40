# Services layer for the similarity boundary analysis toolkit
