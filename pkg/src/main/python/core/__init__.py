# Core module for the similarity boundary analysis toolkit
