import json

from destinations.exports import read_similarity
from destinations.management.base import DestinationsCommand
from destinations.recommend import recommend
from destinations.serializers import RecommendConfigSerializer, RecommendationSerializer


class Command(DestinationsCommand):
    help = 'Recommend destinations for a set of searched destinations from a built similarity matrix.'
    serializer_class = RecommendConfigSerializer

    def add_options(self, parser):
        parser.add_argument('--matrix', help='Similarity matrix CSV written by `build`')
        parser.add_argument('--searched', help='Comma separated searched destination codes')
        parser.add_argument('--k', type=int, help='Number of recommendations')

    def run(self, opts):
        S = read_similarity(opts['matrix'])
        recommendations = recommend(S, opts['searched'], opts['k'])
        data = RecommendationSerializer(recommendations, many=True).data
        self.stdout.write(json.dumps(data, indent=2))
